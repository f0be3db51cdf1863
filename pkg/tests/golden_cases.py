"""The golden CLI invocations: command line, expected exit code, and the
golden file holding the byte-exact expected stdout."""

CASES = [
    ("verify_tangent", ["verify", "plane.adf", "T"], 0),
    ("verify_jacobi_fail", ["verify", "jacobi_fail.adf", "bad"], 1),
    ("cohomology_plane", ["cohomology", "plane.adf", "T",
                          "--degrees", "0..2", "--window", "4,4"], 0),
    ("d_fx2", ["d", "plane.adf", "fx2"], 0),
    ("exact_torus", ["exact", "torus.adf", "qres"], 1),
    ("exact_abelian_window", ["exact", "abelian.adf", "qq"], 3),
    ("curvature_c", ["curvature", "plane.adf", "C"], 0),
    ("flat_c", ["flat", "plane.adf", "C"], 1),
    ("chern_c", ["chern", "plane.adf", "C", "--k", "1"], 0),
    ("obstruction_torus", ["obstruction", "torus.adf", "C", "qres"], 1),
    ("confluence_monopole", ["confluence", "plane.adf", "monopole"], 0),
    ("confluence_jacobi_fail", ["confluence", "jacobi_fail.adf", "badrel"], 1),
    ("normal_form_monopole", ["normal-form", "plane.adf", "monopole",
                              "e2*e1"], 0),
    ("relations_monopole", ["relations", "plane.adf", "T", "qmono"], 0),
    ("atiyah_p1", ["atiyah", "p1.adf", "P"], 0),
    ("class_compare_p1", ["class-compare", "p1.adf", "Z", "A"], 1),
    ("class_compare_log", ["class-compare", "p1log.adf", "Z", "A"], 0),
    ("glue_p1", ["glue", "p1.adf", "P", "A"], 0),
    ("lambda_check_log", ["lambda-check", "p1log.adf", "P", "Z",
                          "logconn"], 0),
    ("lambda_check_taut", ["lambda-check", "p1.adf", "P", "A", "triv"], 0),
    ("cech_dims_p1", ["cech-dims", "p1.adf", "P"], 0),
    ("matched_m", ["matched", "matched.adf", "M"], 0),
    ("twilled_m", ["twilled", "matched.adf", "M"], 0),
    ("compare_total_m", ["compare-total", "matched.adf", "M",
                         "--degrees", "0..2", "--window", "2,2"], 0),
    ("verify_cocycle_json", ["verify", "p1.adf", "A", "--json"], 0),
    ("exact_torus_json", ["exact", "torus.adf", "qres", "--json"], 1),
]
