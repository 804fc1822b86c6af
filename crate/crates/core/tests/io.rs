//! Model-file and output-format tests.

mod common;

use std::fs;
use std::path::PathBuf;

use bernreach::geometry::LinearSystemSet;
use bernreach::model_io::{
    self, parse_model_file, print_problem, project_bundle, read_flowpipe, read_param_sets,
};
use bernreach::reachability::{compute_flowpipe, Flowpipe};
use bernreach::synthesis::synthesize;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn schema(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs").join(name);
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(validator: &jsonschema::Validator, text: &str) {
    let doc: Value = serde_json::from_str(text).expect("output is JSON");
    let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

fn sir_bundle_flowpipe() -> (bernreach::model_io::ProblemSpec, Flowpipe) {
    let spec = load_model("sir_bundle.model");
    let fp = compute_flowpipe(&spec.model, &spec.initial, &spec.params, 300).unwrap();
    (spec, fp)
}

#[test]
fn flowpipe_file_round_trips_bit_exactly() {
    let (spec, fp) = sir_bundle_flowpipe();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sir.flowpipe.json");
    model_io::write_flowpipe(&fp, &spec.model.state_vars, &path).unwrap();
    let (back, vars) = read_flowpipe(&path).unwrap();
    assert_eq!(vars, spec.model.state_vars);
    assert_eq!(back.len(), 301);
    for (a, b) in back.steps().iter().zip(fp.steps()) {
        for (x, y) in a.upper().iter().chain(a.lower()).zip(b.upper().iter().chain(b.lower())) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    assert_eq!(back, fp);
    let again = dir.path().join("again.json");
    model_io::write_flowpipe(&back, &vars, &again).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn flowpipe_json_matches_schema() {
    let validator = schema("flowpipe.schema.json");
    let spec = load_model("sir_reach.model");
    let fp = compute_flowpipe(&spec.model, &spec.initial, &spec.params, 300).unwrap();
    let text = model_io::flowpipe_to_json(&fp, &spec.model.state_vars);
    assert_valid(&validator, &text);
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["steps"].as_array().unwrap().len(), 301);
    assert_valid(&validator, &model_io::flowpipe_to_json(&sir_bundle_flowpipe().1, &spec.model.state_vars));
}

#[test]
fn flowpipe_numbers_carry_seventeen_significant_digits() {
    let spec = parse_model_file("var x; dynamics { x' = x / 3; } init box { x in [0.1, 1]; }").unwrap();
    let fp = compute_flowpipe(&spec.model, &spec.initial, &spec.params, 1).unwrap();
    let text = model_io::flowpipe_to_json(&fp, &spec.model.state_vars);
    let doc: Value = serde_json::from_str(&text).unwrap();
    let upper = doc["steps"][1]["upper"][0].as_f64().unwrap();
    assert_eq!(upper.to_bits(), fp.steps()[1].upper()[0].to_bits());
    assert!(text.contains("3.3333333333333331e-1"), "{text}");
}

#[test]
fn malformed_flowpipe_files_are_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"model\": \"m\"}").unwrap();
    assert!(matches!(read_flowpipe(&path), Err(bernreach::Error::Format { .. })));
    assert!(matches!(read_flowpipe(dir.path().join("missing.json")), Err(bernreach::Error::Io { .. })));
}

#[test]
fn parameter_sets_match_schema_and_round_trip() {
    let validator = schema("paramsets.schema.json");
    let spec = load_model("sir_synth.model");
    let phi = spec.spec.clone().unwrap();
    let set = synthesize(&spec.model, &spec.initial, &spec.params, &phi).unwrap();
    assert!(!set.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    model_io::write_param_sets(&set, &path).unwrap();
    assert_valid(&validator, &fs::read_to_string(&path).unwrap());
    assert_eq!(read_param_sets(&path, 2).unwrap(), set);

    let empty = LinearSystemSet::empty(2);
    model_io::write_param_sets(&empty, &path).unwrap();
    assert_valid(&validator, &fs::read_to_string(&path).unwrap());
    assert!(read_param_sets(&path, 2).unwrap().is_empty());
}

/// Whether `q` lies inside the counter-clockwise polygon `poly`.
fn inside(poly: &[[f64; 2]], q: [f64; 2], tol: f64) -> bool {
    (0..poly.len()).all(|k| {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let cross = (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]);
        cross >= -tol
    })
}

#[test]
fn projections_contain_simulated_states() {
    let (spec, fp) = sir_bundle_flowpipe();
    let (s, i) = (spec.var_index("s").unwrap(), spec.var_index("i").unwrap());
    let polygons: Vec<Vec<[f64; 2]>> = fp
        .steps()
        .iter()
        .map(|b| project_bundle(b, s, i, 32).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (plo, phi) = spec.params.bounding_box().unwrap();
    for _ in 0..100 {
        let x0 = sample_initial(&mut rng, &spec.initial);
        let p = uniform_in_box(&mut rng, &plo, &phi);
        for (x, poly) in simulate(&spec, &x0, &p, 300).iter().zip(&polygons) {
            assert!(inside(poly, [x[s], x[i]], 1e-9), "{x:?} outside {poly:?}");
        }
    }
}

#[test]
fn projection_csv_has_the_documented_layout() {
    let (_, fp) = sir_bundle_flowpipe();
    let csv = model_io::projection_csv(&fp, 0, 1, 32).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("step,vertex_index,x,y"));
    let mut last = (0usize, None::<usize>);
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 4, "{line}");
        let (step, idx): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        f[2].parse::<f64>().unwrap();
        f[3].parse::<f64>().unwrap();
        match last {
            (s, Some(j)) if s == step => assert_eq!(idx, j + 1),
            _ => assert_eq!(idx, 0),
        }
        last = (step, Some(idx));
    }
    assert_eq!(last.0, 300);
    let script = model_io::plot_script("flow.proj.csv", "s", "i");
    assert!(script.contains("flow.proj.csv"));
}

#[test]
fn corpus_models_round_trip_through_the_printer() {
    let mut count = 0;
    for entry in fs::read_dir(models_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "model") {
            let spec = load_model(path.file_name().unwrap().to_str().unwrap());
            let printed = print_problem(&spec);
            assert_eq!(parse_model_file(&printed).unwrap(), spec, "{}", path.display());
            count += 1;
        }
    }
    assert!(count >= 3);
}

#[test]
fn random_box_models_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let lo: f64 = rng.random_range(-10.0..10.0);
        let w: f64 = rng.random_range(0.0..1.0);
        let c: f64 = rng.random_range(-3.0..3.0);
        let text = format!(
            "model r; var u, v; param k in [{lo}, {}];\n\
             dynamics {{ u' = {c}*u*v + k; v' = v^2 - {w}*u; }}\n\
             init box {{ u in [{lo}, {}]; v in [0, {w}]; }}\n\
             spec G[0,3](u - v <= {c});",
            lo + w,
            lo + w
        );
        let spec = parse_model_file(&text).unwrap();
        assert_eq!(parse_model_file(&print_problem(&spec)).unwrap(), spec);
    }
}

#[test]
fn parse_errors_report_line_and_column() {
    let err = parse_model_file("var x;\ndynamics {\n  x' = x +* 2;\n}").unwrap_err();
    assert_eq!(err.location.line, 3, "{err:?}");
    assert!(err.location.column > 1);
    let err = parse_model_file("var x;\ndynamics { x' = x; }\ninit box { y in [0, 1]; }").unwrap_err();
    assert_eq!(err.location.line, 3);
    assert!(err.message.contains('y'), "{}", err.message);
}
