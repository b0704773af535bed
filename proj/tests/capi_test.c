/* Exercises the shared library through its C header only. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "hplab/hplab.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: EXPECT(%s) failed\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static void test_errors(void) {
  hplab_config* cfg = NULL;
  EXPECT(hplab_config_defaults("no-such-experiment", &cfg) == HPLAB_CONFIG_ERROR);
  EXPECT(cfg == NULL);
  EXPECT(strstr(hplab_last_error(), "no-such-experiment") != NULL);
  EXPECT(hplab_status_exit_code(HPLAB_CONFIG_ERROR) == 2);
  EXPECT(hplab_status_exit_code(HPLAB_OVERFLOW) == 3);
  EXPECT(hplab_status_exit_code(HPLAB_COLLISION_ABORT) == 3);
  EXPECT(strcmp(hplab_status_name(HPLAB_OVERFLOW), "Overflow") == 0);

  EXPECT(hplab_config_parse("experiment = dufresne\nh = 0\n", NULL, 0, &cfg) == HPLAB_OK);
  EXPECT(hplab_config_validate(cfg) == HPLAB_CONFIG_ERROR);
  hplab_run* run = NULL;
  EXPECT(hplab_run_experiment(cfg, &run) == HPLAB_CONFIG_ERROR);
  EXPECT(run == NULL);
  hplab_config_free(cfg);

  EXPECT(hplab_config_parse("experiment = dufresne\nbogus = 1\n", NULL, 0, &cfg) == HPLAB_CONFIG_ERROR);
  EXPECT(hplab_config_load(NULL, NULL, 0, &cfg) == HPLAB_INVALID_ARGUMENT);
  EXPECT(hplab_run_report_count(NULL) == 0);
}

static void test_config_round_trip(void) {
  const char* sets[] = {"replicates=250", "s_im=-0.5"};
  hplab_config* cfg = NULL;
  EXPECT(hplab_config_parse("experiment = hua-pickrell-limit # comment\n\nN = 1\n", sets, 2, &cfg) == HPLAB_OK);
  char* value = NULL;
  EXPECT(hplab_config_get(cfg, "replicates", &value) == HPLAB_OK);
  EXPECT(value && strcmp(value, "250") == 0);
  hplab_string_free(value);
  EXPECT(hplab_config_get(cfg, "s_im", &value) == HPLAB_OK);
  EXPECT(value && strcmp(value, "-0.5") == 0);
  hplab_string_free(value);

  char* text = NULL;
  EXPECT(hplab_config_to_text(cfg, &text) == HPLAB_OK);
  hplab_config* again = NULL;
  EXPECT(hplab_config_parse(text, NULL, 0, &again) == HPLAB_OK);
  char* text2 = NULL;
  EXPECT(hplab_config_to_text(again, &text2) == HPLAB_OK);
  EXPECT(text && text2 && strcmp(text, text2) == 0);
  hplab_string_free(text);
  hplab_string_free(text2);
  hplab_config_free(again);
  hplab_config_free(cfg);
}

static void test_density(void) {
  const double x[] = {-3.0, 0.0, 0.5, 12.0};
  double pdf[4], cdf[4];
  EXPECT(hplab_density_eval(1, 0.0, 0.0, x, 4, pdf, cdf) == HPLAB_OK);
  for (int i = 0; i < 4; ++i) {
    const double pi = 3.14159265358979323846;
    EXPECT(fabs(pdf[i] - 1.0 / (pi * (1.0 + x[i] * x[i]))) < 1e-12);
    EXPECT(fabs(cdf[i] - (0.5 + atan(x[i]) / pi)) < 1e-10);
  }
  EXPECT(hplab_density_eval(1, -0.6, 0.0, x, 4, pdf, cdf) != HPLAB_OK);
}

static void test_run_and_replay(const char* out_dir) {
  hplab_config* cfg = NULL;
  const char* sets[] = {"replicates=200", "h=0.015625", "save_paths=2", "path_points=9"};
  EXPECT(hplab_config_parse("experiment = scalar-bougerol\n", sets, 4, &cfg) == HPLAB_OK);
  EXPECT(hplab_config_set(cfg, "out_dir", out_dir) == HPLAB_OK);

  hplab_run* run = NULL;
  EXPECT(hplab_run_experiment(cfg, &run) == HPLAB_OK);
  EXPECT(hplab_run_report_count(run) == 2);
  hplab_report r;
  EXPECT(hplab_run_report(run, 0, &r) == HPLAB_OK);
  EXPECT(strcmp(r.kind, "ks2") == 0);
  EXPECT(r.p_value >= 0.0 && r.p_value <= 1.0);
  EXPECT(r.n1 == 200 && r.n2 == 200);
  EXPECT(hplab_run_report(run, 5, &r) == HPLAB_INVALID_ARGUMENT);

  char* manifest = NULL;
  EXPECT(hplab_run_write(run, NULL, &manifest) == HPLAB_OK);
  EXPECT(manifest && strstr(manifest, "samples.csv") != NULL);
  hplab_string_free(manifest);

  char path[4096];
  snprintf(path, sizeof path, "%s/manifest.json", out_dir);
  char replay_dir[4096];
  snprintf(replay_dir, sizeof replay_dir, "%s/replay", out_dir);
  int identical = 0;
  char* mismatched = NULL;
  EXPECT(hplab_replay(path, replay_dir, &identical, &mismatched) == HPLAB_OK);
  EXPECT(identical == 1);
  EXPECT(mismatched && mismatched[0] == '\0');
  hplab_string_free(mismatched);

  hplab_run_free(run);
  hplab_config_free(cfg);
}

static void test_list(void) {
  char* text = NULL;
  EXPECT(hplab_list_experiments(1, &text) == HPLAB_OK);
  EXPECT(text && strstr(text, "\"time-reversal\"") != NULL);
  hplab_string_free(text);
  EXPECT(hplab_list_experiments(0, &text) == HPLAB_OK);
  EXPECT(text && strstr(text, "density-eval") != NULL);
  hplab_string_free(text);
}

int main(int argc, char** argv) {
  const char* out_dir = argc > 1 ? argv[1] : "capi-out";
  EXPECT(strlen(hplab_version()) > 0);
  test_errors();
  test_config_round_trip();
  test_density();
  test_list();
  test_run_and_replay(out_dir);
  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
