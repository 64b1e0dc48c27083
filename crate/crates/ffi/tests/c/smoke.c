#include <math.h>
#include <stdio.h>
#include <string.h>

#include "abguard.h"

int main(void) {
    double crit;
    uint32_t bucket;
    AbgMonitor *monitor = NULL;
    AbgDecision decision;
    AbgMonitorState state;

    if (abg_chi_square_critical(0.05, 1, &crit) != ABG_STATUS_OK) return 1;
    if (fabs(crit - 3.841458820694124) > 1e-9) return 2;
    if (abg_assign_bucket("433630419", "plane-1", 100, &bucket) != ABG_STATUS_OK) return 3;
    if (bucket != 88) return 4;
    if (abg_chi_square_cdf(-1.0, 1, &crit) != ABG_STATUS_DOMAIN) return 5;
    if (strlen(abg_last_error()) == 0) return 6;

    if (abg_monitor_new(1.0, 1.0, ABG_VARIANT_EXACT, 0.05, 0.0, 0.01, 100, &monitor) != ABG_STATUS_OK) return 7;
    if (abg_monitor_step(monitor, 1, 2108, 3183, &decision) != ABG_STATUS_OK) return 8;
    if (decision.outcome != ABG_OUTCOME_ALERT_LOW) return 9;
    if (abg_monitor_state(monitor, &state) != ABG_STATUS_OK) return 10;
    if (!state.fired || state.direction != ABG_DIRECTION_LOW) return 11;
    abg_monitor_free(monitor);

    printf("ok %s\n", abg_version());
    return 0;
}
