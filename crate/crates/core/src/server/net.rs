use super::config::SessionConfig;
use super::protocol::{ClientMessage, ServerMessage};
use super::session::{spawn_session, SessionCommand, SessionHandle};
use super::trace::TraceWriter;
use super::ServerError;
use crate::swarm::{MagnetInput, Vec2};
use futures_util::{SinkExt, StreamExt};
use log::{debug, info, warn};
use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, oneshot, watch};
use tokio::task::JoinHandle;
use tokio::time::{sleep_until, Instant};
use tokio_tungstenite::tungstenite::Message;

/// In-memory trace lines per session id.
pub type MemoryTraces = Arc<Mutex<HashMap<String, Arc<Mutex<Vec<String>>>>>>;

#[derive(Debug, Clone, Default)]
pub enum TraceTarget {
    /// `<dir>/<session_id>.trace.jsonl`
    Dir(PathBuf),
    /// Keep traces in memory, keyed by session id.
    Memory(MemoryTraces),
    #[default]
    Discard,
}

struct SessionEntry {
    join_token: String,
    commands: mpsc::UnboundedSender<SessionCommand>,
}

/// Session registry shared by every connection.
#[derive(Clone)]
pub struct Server {
    sessions: Arc<Mutex<HashMap<String, SessionEntry>>>,
    traces: TraceTarget,
}

impl Server {
    pub fn new(traces: TraceTarget) -> Self {
        Server {
            sessions: Arc::new(Mutex::new(HashMap::new())),
            traces,
        }
    }

    /// Validate the config, start the session task and return its handle.
    pub fn open_session(&self, config: SessionConfig) -> Result<SessionHandle, ServerError> {
        config.validate()?;
        let mut sessions = self.sessions.lock().expect("session map poisoned");
        if sessions.contains_key(&config.session_id) {
            return Err(ServerError::DuplicateSession(config.session_id));
        }
        let trace = match &self.traces {
            TraceTarget::Dir(dir) => TraceWriter::create(dir, &config.session_id)
                .map_err(|e| ServerError::Trace(format!("{}: {e}", dir.display())))?,
            TraceTarget::Memory(map) => {
                let buf = Arc::new(Mutex::new(Vec::new()));
                map.lock()
                    .expect("trace map poisoned")
                    .insert(config.session_id.clone(), buf.clone());
                TraceWriter::memory(buf)
            }
            TraceTarget::Discard => TraceWriter::null(),
        };
        let token = format!("{:032x}", rand::random::<u128>());
        let handle = spawn_session(config, trace, token.clone());
        sessions.insert(
            handle.session_id.clone(),
            SessionEntry {
                join_token: token,
                commands: handle.commands(),
            },
        );
        info!("session {} open", handle.session_id);
        Ok(handle)
    }

    fn lookup(
        &self,
        session_id: &str,
        token: &str,
    ) -> Result<mpsc::UnboundedSender<SessionCommand>, String> {
        let sessions = self.sessions.lock().expect("session map poisoned");
        match sessions.get(session_id) {
            Some(e) if e.join_token == token => Ok(e.commands.clone()),
            Some(_) => Err("invalid join token".into()),
            None => Err(format!("unknown session {session_id}")),
        }
    }

    /// Start accepting WebSocket connections on `addr`.
    pub async fn bind(self, addr: &str) -> Result<RunningServer, ServerError> {
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|e| ServerError::Bind(addr.to_string(), e))?;
        let local_addr = listener
            .local_addr()
            .map_err(|e| ServerError::Bind(addr.to_string(), e))?;
        let (stop_tx, mut stop_rx) = watch::channel(false);
        let server = self.clone();
        let task = tokio::spawn(async move {
            loop {
                tokio::select! {
                    accepted = listener.accept() => match accepted {
                        Ok((stream, peer)) => {
                            let server = server.clone();
                            tokio::spawn(async move {
                                if let Err(e) = serve_connection(server, stream).await {
                                    debug!("connection {peer}: {e}");
                                }
                            });
                        }
                        Err(e) => warn!("accept failed: {e}"),
                    },
                    _ = stop_rx.changed() => break,
                }
            }
        });
        Ok(RunningServer {
            local_addr,
            server: self,
            stop: stop_tx,
            task,
        })
    }
}

pub struct RunningServer {
    pub local_addr: SocketAddr,
    pub server: Server,
    stop: watch::Sender<bool>,
    task: JoinHandle<()>,
}

impl RunningServer {
    pub fn endpoint(&self) -> String {
        format!("ws://{}", self.local_addr)
    }

    /// Stop accepting connections. Running sessions keep going until their
    /// clients leave.
    pub async fn shutdown(self) {
        let _ = self.stop.send(true);
        let _ = self.task.await;
    }
}

async fn send(
    sink: &mut (impl SinkExt<Message, Error = tokio_tungstenite::tungstenite::Error> + Unpin),
    msg: &ServerMessage,
) -> Result<(), String> {
    sink.send(Message::text(msg.to_json()))
        .await
        .map_err(|e| e.to_string())
}

async fn serve_connection(server: Server, stream: TcpStream) -> Result<(), String> {
    let _ = stream.set_nodelay(true);
    let ws = tokio_tungstenite::accept_async(stream)
        .await
        .map_err(|e| e.to_string())?;
    let (mut sink, mut source) = ws.split();

    // Until a client_hello succeeds the connection only takes control messages.
    let (commands, joined) = loop {
        let Some(frame) = source.next().await else {
            return Ok(());
        };
        let text = match frame.map_err(|e| e.to_string())? {
            Message::Text(t) => t,
            Message::Close(_) => return Ok(()),
            _ => continue,
        };
        let msg: ClientMessage = match serde_json::from_str(text.as_str()) {
            Ok(m) => m,
            Err(e) => {
                send(
                    &mut sink,
                    &ServerMessage::Error {
                        message: format!("bad message: {e}"),
                    },
                )
                .await?;
                continue;
            }
        };
        match msg {
            ClientMessage::OpenSession { config } => {
                let reply = match server.open_session(config) {
                    Ok(h) => ServerMessage::SessionOpened {
                        session_id: h.session_id.clone(),
                        join_token: h.join_token.clone(),
                    },
                    Err(e) => ServerMessage::Error {
                        message: e.to_string(),
                    },
                };
                send(&mut sink, &reply).await?;
            }
            ClientMessage::ClientHello {
                session_id,
                join_token,
            } => {
                let commands = match server.lookup(&session_id, &join_token) {
                    Ok(c) => c,
                    Err(message) => {
                        send(&mut sink, &ServerMessage::Error { message }).await?;
                        continue;
                    }
                };
                let (tx, rx) = oneshot::channel();
                if commands.send(SessionCommand::Join { reply: tx }).is_err() {
                    send(
                        &mut sink,
                        &ServerMessage::Error {
                            message: "session has ended".into(),
                        },
                    )
                    .await?;
                    continue;
                }
                match rx.await {
                    Ok(Ok(j)) => break (commands, j),
                    Ok(Err(message)) => {
                        send(&mut sink, &ServerMessage::Error { message }).await?;
                        continue;
                    }
                    Err(_) => {
                        send(
                            &mut sink,
                            &ServerMessage::Error {
                                message: "session has ended".into(),
                            },
                        )
                        .await?;
                        continue;
                    }
                }
            }
            ClientMessage::MagnetUpdate { .. } => {
                send(
                    &mut sink,
                    &ServerMessage::Error {
                        message: "join a session first".into(),
                    },
                )
                .await?;
            }
        }
    };

    let alias = joined.alias.clone();
    let outbox = joined.outbox.clone();
    let writer = tokio::spawn(async move {
        while let Some(m) = outbox.pop().await {
            if sink.send(Message::text(m.text.to_string())).await.is_err() {
                return;
            }
        }
        let _ = sink.close().await;
    });

    let interval = joined.input_interval;
    let mut last_forward: Option<Instant> = None;
    let mut pending: Option<(MagnetInput, Option<u64>)> = None;
    loop {
        let flush_at = match (&pending, last_forward) {
            (Some(_), Some(t)) => Some(t + interval),
            _ => None,
        };
        tokio::select! {
            frame = source.next() => {
                let text = match frame {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_)) | Err(_)) | None => break,
                    Some(Ok(_)) => continue,
                };
                match serde_json::from_str::<ClientMessage>(text.as_str()) {
                    Ok(ClientMessage::MagnetUpdate { placed, x, y, tick }) => {
                        let input = if placed {
                            MagnetInput::placed(Vec2::new(x, y))
                        } else {
                            MagnetInput::Lifted
                        };
                        pending = Some((input, tick));
                        if last_forward.is_some_and(|t| Instant::now() < t + interval) {
                            continue;
                        }
                    }
                    Ok(_) => {
                        debug!("{alias}: ignoring non-input message after join");
                        continue;
                    }
                    Err(e) => {
                        debug!("{alias}: bad message: {e}");
                        continue;
                    }
                }
            }
            _ = sleep_until(flush_at.unwrap_or_else(Instant::now)), if flush_at.is_some() => {}
        }
        if let Some((input, tick)) = pending.take() {
            last_forward = Some(Instant::now());
            let cmd = SessionCommand::Input {
                alias: alias.clone(),
                input,
                tick,
            };
            if commands.send(cmd).is_err() {
                break;
            }
        }
    }
    let _ = commands.send(SessionCommand::Leave { alias });
    joined.outbox.close();
    let _ = writer.await;
    Ok(())
}
