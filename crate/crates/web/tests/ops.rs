use aglab_web::ops;

fn dictator(m: u32, n: usize) -> String {
    // All codes of [m]^n whose first symbol is 1.
    let mut codes = vec![vec![1u32]];
    for _ in 1..n {
        codes = codes
            .into_iter()
            .flat_map(|c| (1..=m).map(move |s| [c.clone(), vec![s]].concat()))
            .collect();
    }
    serde_json::json!({ "m": m, "n": n, "codes": codes }).to_string()
}

#[test]
fn search_matches_known_optimum() {
    let v = ops::search(3, 2, 1, true).unwrap();
    assert_eq!(v["optimum"], 3);
    assert_eq!(v["all_stars"], true);
    assert!(
        ops::search(5, 4, 2, false).is_err(),
        "625 codes exceed the demo cap"
    );
}

#[test]
fn stability_of_a_dictator_is_affine_in_rho() {
    let m = 3;
    let f = ops::parse_family(&dictator(m, 2)).unwrap();
    let v = ops::stability_curve(&f, 4).unwrap();
    assert_eq!(v["measure"], "1/3");
    let curve = v["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 5);
    for (k, point) in curve.iter().enumerate() {
        // With probability rho the coordinate is kept, otherwise redrawn:
        // Stab = (1/m) (rho + (1 - rho)/m).
        let rho = k as f64 / 4.0;
        let expected = (rho + (1.0 - rho) / m as f64) / m as f64;
        assert!(
            (point["approx"].as_f64().unwrap() - expected).abs() < 1e-12,
            "rho = {rho}"
        );
    }
    assert_eq!(curve[0]["stab"], "1/9");
    assert_eq!(curve[4]["stab"], "1/3");
    assert!(ops::stability_curve(&f, 0).is_err());
}

#[test]
fn boost_trace_returns_a_report() {
    let f = ops::parse_family(&dictator(4, 2)).unwrap();
    let v = ops::boost_trace(&f, 2, "2", 0).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["check"].is_string());
    assert!(ops::boost_trace(&f, 1, "2", 0).is_err());
}

#[test]
fn malformed_families_are_rejected() {
    assert!(ops::parse_family("{\"m\": 3}").is_err());
    assert!(ops::parse_family(r#"{"m":2,"n":2,"codes":[[1,3]]}"#).is_err());
}

#[test]
fn page_defaults_run() {
    let page = include_str!("../www/index.html");
    let sample = |id: &str| {
        let start = page.find(&format!("id=\"{id}\">")).unwrap() + id.len() + 6;
        let end = start + page[start..].find("</textarea>").unwrap();
        ops::parse_family(&page[start..end]).unwrap()
    };
    ops::search(3, 3, 1, true).unwrap();
    ops::stability_curve(&sample("c-family"), 16).unwrap();
    ops::boost_trace(&sample("b-family"), 2, "2", 0).unwrap();
}
