//! Browser bindings: each operation takes a JSON request
//! `{"formula": "...", "primes": [2, 3]}` and returns a JSON response with
//! either `"output"` or `"error"`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use padiq::qe::{decide_sentence, eliminate_quantifiers, solve_grounded_1v, QeConfig};
use padiq::zmodel::SatResult;
use padiq::{parse, render, Formula, PrimeSet};

fn request(text: &str) -> Result<(Formula, QeConfig), String> {
    let v: Value = serde_json::from_str(text).map_err(|e| format!("bad request: {e}"))?;
    let formula = v["formula"].as_str().ok_or("bad request: missing \"formula\"")?;
    let primes = match &v["primes"] {
        Value::Null => vec![2, 3],
        Value::Array(ps) => ps
            .iter()
            .map(|p| p.as_u64().ok_or("bad request: primes must be positive integers"))
            .collect::<Result<_, _>>()?,
        _ => return Err("bad request: \"primes\" must be an array".into()),
    };
    let primes = PrimeSet::new(primes).map_err(|e| e.to_string())?;
    let f = parse(formula, &primes).map_err(|e| e.to_string())?;
    Ok((f, QeConfig::new(primes)))
}

fn respond(r: Result<Value, String>) -> String {
    match r {
        Ok(mut v) => {
            v["ok"] = json!(true);
            v.to_string()
        }
        Err(e) => json!({ "ok": false, "error": e }).to_string(),
    }
}

/// Eliminates all quantifiers; `output` is the rendered formula.
#[wasm_bindgen]
pub fn eliminate(req: &str) -> String {
    respond(request(req).and_then(|(f, cfg)| {
        let g = eliminate_quantifiers(&f, &cfg).map_err(|e| e.to_string())?;
        Ok(json!({ "output": render(&g) }))
    }))
}

/// Decides a sentence; `output` is a boolean.
#[wasm_bindgen]
pub fn decide(req: &str) -> String {
    respond(request(req).and_then(|(f, cfg)| {
        let truth = decide_sentence(&f, &cfg).map_err(|e| e.to_string())?;
        Ok(json!({ "output": truth }))
    }))
}

/// Solves a formula in one free variable; `witness` is a decimal string
/// or null.
#[wasm_bindgen]
pub fn solve(req: &str) -> String {
    respond(request(req).and_then(|(f, cfg)| {
        let s = solve_grounded_1v(&f, &cfg).map_err(|e| e.to_string())?;
        let witness = match &s.result {
            SatResult::Sat(w) => json!(w.to_string()),
            SatResult::Unsat => Value::Null,
        };
        Ok(json!({
            "output": s.result.to_string(),
            "variable": s.var,
            "witness": witness,
            "certificate": s.certificate.map(|c| c.to_string()),
        }))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(op: fn(&str) -> String, req: Value) -> Value {
        serde_json::from_str(&op(&req.to_string())).unwrap()
    }

    #[test]
    fn operations_round_trip_json() {
        let v = call(
            eliminate,
            json!({ "formula": "E x. v2(x - a) >= 1 && v2(x) >= 1", "primes": [2] }),
        );
        assert_eq!(v["output"], "D2(a)");
        assert_eq!(v["ok"], true);
        let v = call(decide, json!({ "formula": "A x. D2(x) -> D2(x + 2)" }));
        assert_eq!(v["output"], true);
        let v = call(solve, json!({ "formula": "v2(x - 1) >= 2 && D3(x)" }));
        assert_eq!(
            (v["output"].as_str(), v["witness"].as_str()),
            (Some("Sat(9)"), Some("9"))
        );
        let v = call(solve, json!({ "formula": "v2(x) >= 1 && !D2(x)" }));
        assert_eq!((v["output"].as_str(), v["witness"].is_null()), (Some("Unsat"), true));
    }

    #[test]
    fn errors_are_reported_in_json() {
        let v: Value = serde_json::from_str(&decide("not json")).unwrap();
        assert_eq!(v["ok"], false);
        let v = call(decide, json!({ "formula": "D3(x" }));
        assert!(v["error"].as_str().unwrap().contains("syntax"));
        let v = call(eliminate, json!({ "formula": "D3(x)", "primes": [4] }));
        assert_eq!(v["ok"], false);
    }
}
