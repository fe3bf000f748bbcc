/* Drives a vehicle unit straight ahead for 5 s and prints its position. */
#include <stdio.h>
#include "cosim_dse.h"

int main(void) {
    const char *names[] = {"m_robot"};
    const double values[] = {1500.0};
    CosimUnit *unit = NULL;
    if (cosim_unit_new("vehicle", names, values, 1, &unit) != COSIM_STATUS_OK) {
        fprintf(stderr, "error: %s\n", cosim_last_error_message());
        return 1;
    }
    cosim_unit_set_input(unit, "velocity", 2.0);
    for (int i = 0; i < 500; i++) {
        cosim_unit_do_step(unit, 0.01);
    }
    double t, x, y;
    cosim_unit_time(unit, &t);
    cosim_unit_get_output(unit, "x", &x);
    cosim_unit_get_output(unit, "y", &y);
    printf("t=%.2f x=%.6f y=%.6f\n", t, x, y);

    if (cosim_unit_get_output(unit, "nope", &x) != COSIM_STATUS_INVALID_ARGUMENT) {
        return 2;
    }
    printf("error: %s\n", cosim_last_error_message());
    cosim_unit_free(unit);
    return 0;
}
