use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(eeorder::eeorder)(py);
        let globals = PyDict::new(py);
        globals.set_item("ee", module).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn parses_tokens() {
    run(r#"
h = ee.Language("hmong")
assert h.parse("ntuj") == ("nt", "u", "j")
assert h.parse("lo") == ("l", "o", "∅")
assert h.parse("qqq9") is None
"#);
}

#[test]
fn scales_compare_and_reject_unknown_symbols() {
    run(r#"
s = ee.Scale("j < b < m")
assert s.ranked_symbols() == ["j", "b", "m"]
assert s.compare("m", "j") == "unattested"
assert s.compare("b", "b") == "tie"
try:
    s.rank("zz")
    raise AssertionError("no error")
except ValueError:
    pass
"#);
}

#[test]
fn worked_in_context_example() {
    run(r#"
assert abs(ee.in_context_accuracy(439, 447, 4, 0) * 100 - 99.55) < 0.01
try:
    ee.in_context_accuracy(0, 0, 0, 0)
    raise AssertionError("no error")
except ValueError:
    pass
"#);
}

#[test]
fn planted_fixtures_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    run(&format!(
        r#"
import os
d = {d:?}
ee.write_fixtures(d, 5)
h = ee.Language("hmong")
data = os.path.join(d, "planted_ee.tsv")
s, acc = ee.search_best_scale(h, data)
assert acc == 1.0 and str(s) == "j < b < m < v < s < g < ∅", (str(s), acc)
r = ee.classify(h, data, classifier="rules", seed=2)
assert r["rows"][0]["mean_accuracy"] == 1.0
"#
    ));
}
