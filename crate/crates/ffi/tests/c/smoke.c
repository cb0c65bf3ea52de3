#include <math.h>
#include <stdio.h>
#include <string.h>

#include "mrnprk.h"

/* y' = -y^2 split as F(u, v) = -u v. */
static int eval(void *user, size_t n, const double *u, const double *v, double *out) {
    (void)user;
    for (size_t i = 0; i < n; i++) out[i] = -u[i] * v[i];
    return 0;
}

static int solve(void *user, size_t n, double gh, const double *v, const double *rhs, double *out) {
    int *calls = (int *)user;
    (*calls)++;
    for (size_t i = 0; i < n; i++) out[i] = rhs[i] / (1.0 + gh * v[i]);
    return 0;
}

int main(void) {
    MrnprkMethod *m = NULL;
    if (mrnprk_method_new("MR-NPRK3-1[ssp3-2x]", &m) != MRNPRK_STATUS_OK) return 1;

    size_t nominal = 0, verified = 0;
    mrnprk_method_order(m, 1e-10, &nominal, &verified);
    if (nominal != 3 || verified != 3) return 2;

    int calls = 0;
    MrnprkSystem *sys = NULL;
    if (mrnprk_system_new(1, eval, solve, &calls, &sys) != MRNPRK_STATUS_OK) return 3;

    double y = 1.0;
    MrnprkStats st;
    if (mrnprk_integrate(m, sys, &y, 1, 0.0, 1.0, 40, NULL, &st) != MRNPRK_STATUS_OK) return 4;
    if (fabs(y - 0.5) > 1e-6 || st.steps != 40 || calls == 0) return 5;

    MrnprkMethod *bad = NULL;
    if (mrnprk_method_new("no-such-method", &bad) != MRNPRK_STATUS_INVALID_ARGUMENT) return 6;
    const char *msg = mrnprk_last_error();
    if (msg == NULL || strstr(msg, "no-such-method") == NULL) return 7;

    mrnprk_system_free(sys);
    mrnprk_method_free(m);
    printf("ok %.17g\n", y);
    return 0;
}
