#include <stdio.h>
#include <string.h>
#include "gptc.h"

static const char *BELL =
    "theory quantum\n"
    "type q N=2\n"
    "op P1 : - -> q gate=prep_ket([1, 0])\n"
    "op P2 : - -> q gate=prep_ket([1, 0])\n"
    "op H : q -> q gate=h\n"
    "op CX : q q -> q q gate=cnot\n"
    "op M1 : q -> - gate=measure_z\n"
    "op M2 : q -> - gate=measure_z\n"
    "wire a P1.out0 -> H.in0\n"
    "wire b H.out0 -> CX.in0\n"
    "wire c P2.out0 -> CX.in1\n"
    "wire d CX.out0 -> M1.in0\n"
    "wire e CX.out1 -> M2.in0\n";

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, gptc_last_error()); return 1; } } while (0)

int main(void) {
    GptcCircuit *c = NULL;
    CHECK(gptc_circuit_parse(BELL, &c) == GPTC_STATUS_OK);
    double p = -1.0;
    CHECK(gptc_circuit_evaluate(c, "M1=0,M2=0", -1, &p) == GPTC_STATUS_OK);
    CHECK(p > 0.5 - 1e-10 && p < 0.5 + 1e-10);
    CHECK(gptc_circuit_evaluate(c, "M1=0,M2=1", -1, &p) == GPTC_STATUS_OK);
    CHECK(p < 1e-10);
    CHECK(gptc_circuit_evaluate(c, "M9=0", -1, &p) == GPTC_STATUS_INVALID_ARGUMENT);
    CHECK(strlen(gptc_last_error()) > 0);

    char *text = NULL;
    CHECK(gptc_circuit_serialize(c, false, &text) == GPTC_STATUS_OK);
    CHECK(strncmp(text, "theory quantum\n", 15) == 0);
    gptc_string_free(text);
    gptc_circuit_free(c);

    CHECK(gptc_circuit_parse("theory quantum\nop A\n", &c) == GPTC_STATUS_PARSE_ERROR);
    CHECK(c == NULL);

    uint64_t k_ab = 0, prod = 0;
    CHECK(gptc_counting_check("quaternionic", 2, 2, &k_ab, &prod) == GPTC_STATUS_CHECK_FAILED);
    CHECK(k_ab == 28 && prod == 36);
    printf("ok %s\n", gptc_version());
    return 0;
}
