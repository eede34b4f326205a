use super::{AgentBrain, AgentSpec, Observation, SimError};
use crate::server::{ClientMessage, OutcomeMessage, ServerMessage, SessionConfig};
use crate::swarm::{MagnetInput, Vec2};
use futures_util::{SinkExt, StreamExt};
use rand_chacha::ChaCha8Rng;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

/// A joined participant connection, positioned just after the welcome.
pub struct AgentConnection {
    pub alias: String,
    pub config: SessionConfig,
    ws: Ws,
}

async fn connect(endpoint: &str) -> Result<Ws, SimError> {
    let (ws, _) = connect_async(endpoint)
        .await
        .map_err(|e| SimError::Connect {
            endpoint: endpoint.to_string(),
            message: e.to_string(),
        })?;
    Ok(ws)
}

async fn send(ws: &mut Ws, msg: &ClientMessage) -> Result<(), SimError> {
    let text = serde_json::to_string(msg).expect("client messages always serialize");
    ws.send(Message::text(text))
        .await
        .map_err(|e| SimError::Protocol(format!("send failed: {e}")))
}

/// Next server message, or `None` once the connection is closed.
async fn recv(ws: &mut Ws) -> Result<Option<ServerMessage>, SimError> {
    while let Some(frame) = ws.next().await {
        match frame {
            Ok(Message::Text(t)) => {
                return serde_json::from_str(t.as_str())
                    .map(Some)
                    .map_err(|e| SimError::Protocol(format!("bad server message: {e}")))
            }
            Ok(Message::Close(_)) => return Ok(None),
            Ok(_) => continue,
            Err(e) => return Err(SimError::Protocol(format!("receive failed: {e}"))),
        }
    }
    Ok(None)
}

/// Ask a running server to open a session. Returns its id and join token.
pub async fn open_remote_session(
    endpoint: &str,
    config: SessionConfig,
) -> Result<(String, String), SimError> {
    let mut ws = connect(endpoint).await?;
    send(&mut ws, &ClientMessage::OpenSession { config }).await?;
    let reply = recv(&mut ws).await?;
    let _ = ws.close(None).await;
    match reply {
        Some(ServerMessage::SessionOpened {
            session_id,
            join_token,
        }) => Ok((session_id, join_token)),
        Some(ServerMessage::Error { message }) => Err(SimError::Rejected(message)),
        Some(other) => Err(SimError::Protocol(format!("unexpected reply {other:?}"))),
        None => Err(SimError::Protocol(
            "connection closed before session_opened".into(),
        )),
    }
}

/// Connect and join a session, waiting for the welcome.
pub async fn connect_agent(
    endpoint: &str,
    session_id: &str,
    join_token: &str,
) -> Result<AgentConnection, SimError> {
    let mut ws = connect(endpoint).await?;
    send(
        &mut ws,
        &ClientMessage::ClientHello {
            session_id: session_id.to_string(),
            join_token: join_token.to_string(),
        },
    )
    .await?;
    match recv(&mut ws).await? {
        Some(ServerMessage::ServerWelcome {
            agent_alias,
            config_echo,
        }) => Ok(AgentConnection {
            alias: agent_alias,
            config: config_echo,
            ws,
        }),
        Some(ServerMessage::Error { message }) => Err(SimError::Rejected(message)),
        Some(other) => Err(SimError::Protocol(format!(
            "expected server_welcome, got {other:?}"
        ))),
        None => Err(SimError::Protocol(
            "connection closed before server_welcome".into(),
        )),
    }
}

/// Play a joined connection through to `session_end`, answering every
/// state tick with one magnet update.
pub async fn drive_agent(
    mut conn: AgentConnection,
    spec: &AgentSpec,
    mut rng: ChaCha8Rng,
) -> Result<Vec<OutcomeMessage>, SimError> {
    let params = conn.config.dynamics;
    let mut brain = AgentBrain::new(spec.policy.clone());
    let mut question = 0usize;
    let mut outcomes = Vec::new();
    loop {
        let Some(msg) = recv(&mut conn.ws).await? else {
            return Err(SimError::Protocol(format!(
                "{}: connection closed before session_end",
                conn.alias
            )));
        };
        match msg {
            ServerMessage::QuestionBegin { .. } => {
                let answer = spec.answers.as_ref().and_then(|a| a.get(question).copied());
                brain.start_question(answer);
                question += 1;
            }
            ServerMessage::StateTick { tick, puck, .. } => {
                let obs = Observation {
                    tick,
                    puck: Vec2::new(puck.x, puck.y),
                };
                let update = match brain.decide(&obs, &params, &mut rng) {
                    MagnetInput::Placed { x, y } => ClientMessage::MagnetUpdate {
                        placed: true,
                        x,
                        y,
                        tick: Some(tick),
                    },
                    MagnetInput::Lifted => ClientMessage::MagnetUpdate {
                        placed: false,
                        x: 0.0,
                        y: 0.0,
                        tick: Some(tick),
                    },
                };
                send(&mut conn.ws, &update).await?;
            }
            ServerMessage::Outcome(o) => outcomes.push(o),
            ServerMessage::SessionEnd {} => {
                let _ = conn.ws.close(None).await;
                return Ok(outcomes);
            }
            ServerMessage::Error { message } => return Err(SimError::Rejected(message)),
            other => return Err(SimError::Protocol(format!("unexpected message {other:?}"))),
        }
    }
}
