//! Browser bindings for the workbench. Each export takes plain numbers or a
//! family in the CLI's JSON form and returns a JSON string; the page in
//! `www/` renders it. The logic lives in `ops` so it can be tested natively.

use wasm_bindgen::prelude::*;

pub mod ops {
    use aglab_core::analysis::{boost_pipeline_trace, stability};
    use aglab_core::codes::FamilyJson;
    use aglab_core::exact::{fmt_q, parse_q, q, to_f64};
    use aglab_core::search::{max_avoiding, Mode, SearchConfig};
    use aglab_core::{CodeBox, Error, Family, ProductMeasure, Result};
    use serde_json::{json, Value};

    /// Browsers run single-threaded, so searches are kept small.
    pub const WEB_MAX_CODES: u64 = 256;
    pub const WEB_NODE_BUDGET: u64 = 20_000_000;

    pub fn parse_family(text: &str) -> Result<Family> {
        let j: FamilyJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Family::from_json(&j)
    }

    /// Largest (t-1)-avoiding families of `[m]^n`.
    pub fn search(m: u32, n: usize, t: usize, all: bool) -> Result<Value> {
        let b = CodeBox::new(m, n)?;
        if b.size() > WEB_MAX_CODES {
            return Err(Error::Budget(format!(
                "{b} has {} codes; the demo allows {WEB_MAX_CODES}",
                b.size()
            )));
        }
        let mut config = SearchConfig::new(if all { Mode::All } else { Mode::One });
        config.workers = Some(1);
        config.node_budget = WEB_NODE_BUDGET;
        Ok(max_avoiding(b, t, &config)?.to_json())
    }

    /// `Stab_rho(1_F)` under the uniform measure at `points + 1` evenly spaced `rho` in [0, 1].
    pub fn stability_curve(family: &Family, points: u32) -> Result<Value> {
        if points == 0 || points > 64 {
            return Err(Error::Domain(format!(
                "points must be in 1..=64, got {points}"
            )));
        }
        let nu = ProductMeasure::uniform(family.space());
        let curve = (0..=points)
            .map(|k| {
                let rho = q(k.into(), points.into());
                let s = stability(family, &nu, &rho)?;
                Ok(json!({ "rho": fmt_q(&rho), "stab": fmt_q(&s), "approx": to_f64(&s) }))
            })
            .collect::<Result<Vec<_>>>()?;
        let mu = nu.measure_of(family)?;
        Ok(json!({ "measure": fmt_q(&mu), "curve": curve }))
    }

    /// Traced measure boosting under the uniform measure.
    pub fn boost_trace(family: &Family, b: u32, tau: &str, seed: u64) -> Result<Value> {
        let nu = ProductMeasure::uniform(family.space());
        let trace = boost_pipeline_trace(family, &nu, b, &parse_q(tau)?, seed)?;
        Ok(serde_json::to_value(&trace.report).expect("reports serialize"))
    }
}

fn respond(v: aglab_core::Result<serde_json::Value>) -> Result<String, JsError> {
    v.map(|v| v.to_string())
        .map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn search(m: u32, n: usize, t: usize, all: bool) -> Result<String, JsError> {
    respond(ops::search(m, n, t, all))
}

#[wasm_bindgen(js_name = stabilityCurve)]
pub fn stability_curve(family: &str, points: u32) -> Result<String, JsError> {
    respond(ops::parse_family(family).and_then(|f| ops::stability_curve(&f, points)))
}

#[wasm_bindgen(js_name = boostTrace)]
pub fn boost_trace(family: &str, b: u32, tau: &str, seed: u64) -> Result<String, JsError> {
    respond(ops::parse_family(family).and_then(|f| ops::boost_trace(&f, b, tau, seed)))
}
