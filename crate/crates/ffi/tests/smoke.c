#include <stdio.h>
#include "swarmlab.h"

int main(void) {
    SlSwarm *swarm = NULL;
    if (sl_swarm_new(2, NULL, &swarm) != SL_STATUS_OK) return 1;
    /* opposite magnets: the puck must not move */
    if (sl_swarm_set_magnet(swarm, 0, 0.0, 0.11) != SL_STATUS_OK) return 2;
    if (sl_swarm_set_magnet(swarm, 1, 0.0, -0.11) != SL_STATUS_OK) return 3;
    SlPhase phase = SL_PHASE_DELIBERATING;
    while (phase == SL_PHASE_DELIBERATING) {
        if (sl_swarm_step(swarm, &phase) != SL_STATUS_OK) return 4;
    }
    SlOutcome out;
    sl_swarm_outcome(swarm, &out);
    sl_swarm_free(swarm);
    if (out.phase != SL_PHASE_TIMED_OUT || out.tick != 1200 || out.choice != -1) return 5;

    unsigned char a[4] = {0, 1, 2, 2};
    unsigned char b[4] = {0, 1, 2, 1};
    double k = 0.0;
    if (sl_kappa(a, b, 4, &k) != SL_STATUS_OK) return 6;
    printf("%s kappa=%.6f\n", sl_version(), k);
    return 0;
}
