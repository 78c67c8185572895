//! Shared implementation of the command surface used by the CLI binary and
//! the C bindings: parse a map specification, run an analysis, and emit a
//! deterministic JSON report.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::lattes::{degeneracy_demo, flexible_lattes};
use crate::moebius::Moebius;
use crate::num::Pt;
use crate::poly::Poly;
use crate::qdiff::{invariance_residual, relation_qdiff, sample_points};
use crate::ratmap::{
    critical_set, critical_set_polynomial, ensure_finite_critical_orbits, ChartKind, CriticalSet,
    RatMap,
};
use crate::relations::{
    build_proper, detect_relations, CriticalRelation, OrbitModel, SymbolicSpec, TriState,
};
use crate::report::{complex_json, jacobian_report_json, quad_diff_json, Report};
use crate::transversality::{certify, deficit_identity_check, relation_jacobian};
use crate::util::{NUMERIC_HORIZON, ORBIT_COINCIDE_TOL};

/// How a run ended, mapped to the process exit code by the binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// 0: success (certified positive where applicable).
    Success,
    /// 1: the analysis completed and decided the negative.
    CertifiedNegative,
    /// 2: the input could not be used.
    InputError,
    /// 3: the numerics could not certify an answer.
    Uncertifiable,
}

pub fn outcome_for_error(e: &Error) -> Outcome {
    match e {
        Error::InvalidInput(_)
        | Error::ZeroPolynomial
        | Error::ZeroDenominator
        | Error::DegreeTooLow { .. }
        | Error::DegenerateMoebius { .. } => Outcome::InputError,
        _ => Outcome::Uncertifiable,
    }
}

/// A parsed map specification.
pub enum MapInput {
    Map(RatMap),
    Symbolic(SymbolicSpec),
}

/// Options shared by every command.
#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub horizon: usize,
    pub tol: f64,
    pub seed: u64,
    pub samples: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            horizon: NUMERIC_HORIZON,
            tol: ORBIT_COINCIDE_TOL,
            seed: 7,
            samples: 24,
        }
    }
}

/// Accepts a fixture name ("chebyshev2", "misiurewicz_i", "lattes:a=2+0i",
/// "fig1"), inline JSON with coefficient arrays or a symbolic diagram, or a
/// path to a JSON file.
pub fn parse_spec(spec: &str) -> Result<MapInput> {
    let s = spec.trim();
    match s {
        "chebyshev2" => return Ok(MapInput::Map(fixtures::chebyshev2())),
        "misiurewicz_i" => return Ok(MapInput::Map(fixtures::misiurewicz_i())),
        "fig1" => return Ok(MapInput::Symbolic(fixtures::fig1_spec())),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("lattes:a=") {
        let a = fixtures::parse_complex(rest)?;
        let lattes = flexible_lattes(a, 1e-8)?;
        return Ok(MapInput::Map(lattes.map));
    }
    let body = if s.starts_with('{') {
        s.to_string()
    } else {
        std::fs::read_to_string(s)
            .map_err(|_| Error::InvalidInput(format!("unknown fixture or unreadable file: {s}")))?
    };
    parse_spec_json(&body)
}

fn parse_spec_json(body: &str) -> Result<MapInput> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| Error::InvalidInput(format!("bad JSON: {e}")))?;
    if v.get("nu").is_some() {
        let spec: SymbolicSpec = serde_json::from_value(v)
            .map_err(|e| Error::InvalidInput(format!("bad symbolic model: {e}")))?;
        return Ok(MapInput::Symbolic(spec));
    }
    let coeffs = |key: &str| -> Result<Option<Poly>> {
        match v.get(key) {
            None => Ok(None),
            Some(arr) => {
                let pairs: Vec<[f64; 2]> = serde_json::from_value(arr.clone())
                    .map_err(|e| Error::InvalidInput(format!("bad {key}: {e}")))?;
                Ok(Some(Poly::new(
                    pairs
                        .iter()
                        .map(|&[re, im]| Complex64::new(re, im))
                        .collect(),
                )))
            }
        }
    };
    let num =
        coeffs("numerator")?.ok_or_else(|| Error::InvalidInput("missing numerator".into()))?;
    let den = coeffs("denominator")?.unwrap_or_else(Poly::one);
    Ok(MapInput::Map(RatMap::new(num, den, 1e-12)?))
}

pub fn parse_relation(s: &str) -> Result<CriticalRelation> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::InvalidInput("relation must be i,j,m,n".into()));
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad relation index {p}")))
        })
        .collect::<Result<_>>()?;
    CriticalRelation::new(nums[0], nums[1], nums[2], nums[3])
}

/// Parses "a;b;c;d" of complex literals into a Moebius transformation.
pub fn parse_sigma(s: &str) -> Result<Moebius> {
    let parts: Vec<&str> = s.split(';').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::InvalidInput("sigma must be a;b;c;d".into()));
    }
    let vals: Vec<Complex64> = parts
        .iter()
        .map(|p| fixtures::parse_complex(p))
        .collect::<Result<_>>()?;
    Moebius::new(vals[0], vals[1], vals[2], vals[3])
}

fn pt_json(p: &Pt) -> Value {
    match p {
        Pt::Finite(z) => complex_json(*z),
        Pt::Infinity => Value::String("inf".into()),
    }
}

fn relations_json(rels: &[CriticalRelation]) -> Value {
    Value::Array(rels.iter().map(|r| json!([r.i, r.j, r.m, r.n])).collect())
}

fn tri_json(t: TriState) -> Value {
    match t {
        TriState::True => Value::Bool(true),
        TriState::False => Value::Bool(false),
        TriState::Unknown => Value::String("unknown".into()),
    }
}

fn polynomial_view(map: &RatMap) -> bool {
    map.is_polynomial()
}

fn numeric_critical_set(map: &RatMap) -> Result<CriticalSet> {
    if polynomial_view(map) {
        critical_set_polynomial(map, crate::util::ROOT_CLUSTER_TOL)
    } else {
        critical_set(map, crate::util::ROOT_CLUSTER_TOL)
    }
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

pub fn cmd_analyze(spec: &str, opts: Options) -> Result<(Report, Outcome)> {
    let results = match parse_spec(spec)? {
        MapInput::Map(map) => {
            let cs = numeric_critical_set(&map)?;
            let orbits: Vec<Value> = cs
                .points
                .iter()
                .map(|(c, _)| {
                    let orbit = map.orbit(*c, opts.horizon);
                    Value::Array(orbit.iter().map(pt_json).collect())
                })
                .collect();
            json!({
                "kind": "map",
                "degree": map.degree(),
                "polynomial": map.is_polynomial(),
                "nu": cs.nu(),
                "mu_signature": cs.multiplicities(),
                "critical_points": cs.points.iter().map(|(p, m)| json!({
                    "point": pt_json(p),
                    "multiplicity": m,
                })).collect::<Vec<_>>(),
                "orbits": orbits,
            })
        }
        MapInput::Symbolic(sspec) => {
            let mut model = OrbitModel::symbolic(&sspec)?;
            let built = build_proper(&mut model)?;
            json!({
                "kind": "symbolic",
                "nu": sspec.nu,
                "zeta": built.zeta,
                "generators": sspec.generators,
                "landings": sspec.landings,
                "proper_collection": relations_json(&built.relations),
            })
        }
    };
    let report = Report::new("analyze", spec, results)
        .tolerance("tol", opts.tol)
        .tolerance("horizon", opts.horizon as f64);
    Ok((report, Outcome::Success))
}

// ---------------------------------------------------------------------------
// relations
// ---------------------------------------------------------------------------

pub fn cmd_relations(spec: &str, opts: Options) -> Result<(Report, Outcome)> {
    let mut model = match parse_spec(spec)? {
        MapInput::Map(map) => OrbitModel::numeric(&map, opts.tol, opts.horizon)?,
        MapInput::Symbolic(sspec) => OrbitModel::symbolic(&sspec)?,
    };
    let detected = detect_relations(&mut model)?;
    let built = build_proper(&mut model)?;
    let results = json!({
        "detected": relations_json(&detected),
        "proper_collection": relations_json(&built.relations),
        "zeta": built.zeta,
        "flags": {
            "full": tri_json(built.full),
            "minimally_full": tri_json(built.minimally_full),
            "proper": tri_json(built.proper),
            "noncyclic": built.noncyclic,
            "definitive": tri_json(built.definitive),
        },
    });
    let report = Report::new("relations", spec, results)
        .tolerance("tol", opts.tol)
        .tolerance("horizon", opts.horizon as f64);
    Ok((report, Outcome::Success))
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

pub fn cmd_certify(
    spec: &str,
    chart: &str,
    sigma: Option<&Moebius>,
    opts: Options,
) -> Result<(Report, Outcome)> {
    let map = match parse_spec(spec)? {
        MapInput::Map(map) => map,
        MapInput::Symbolic(_) => {
            return Err(Error::InvalidInput(
                "certification needs a numeric map, not a symbolic diagram".into(),
            ))
        }
    };

    let chart_kind = match (chart, map.is_polynomial()) {
        ("auto", true) | ("poly", true) => ChartKind::MonicPoly,
        ("auto", false) | ("rat", _) => ChartKind::RatAffine,
        ("family:const", true) | ("family", true) => ChartKind::FamilyConst,
        ("poly", false) | ("family:const", false) | ("family", false) => {
            return Err(Error::InvalidInput(
                "polynomial charts need a polynomial map".into(),
            ))
        }
        (other, _) => {
            return Err(Error::InvalidInput(format!(
                "unknown chart {other}; use rat, poly, family:const or auto"
            )))
        }
    };

    // move orbits away from infinity for the full rational chart
    let (work, conjugated) = if chart_kind == ChartKind::RatAffine {
        let form = ensure_finite_critical_orbits(&map, 1e-12, opts.horizon.min(64), opts.seed)?;
        (form.map, form.conjugated)
    } else {
        (map, false)
    };

    let cs = match chart_kind {
        ChartKind::RatAffine => critical_set(&work, crate::util::ROOT_CLUSTER_TOL)?,
        _ => critical_set_polynomial(&work, crate::util::ROOT_CLUSTER_TOL)?,
    };
    let mut model = OrbitModel::numeric(&work, opts.tol, opts.horizon)?;
    let built = build_proper(&mut model)?;

    if built.relations.is_empty() {
        let results = json!({
            "relations": [],
            "expected_rank": 0,
            "certified": true,
            "note": "no critical relations within the horizon",
            "conjugated": conjugated,
        });
        let report = Report::new("certify", spec, results)
            .tolerance("tol", opts.tol)
            .tolerance("horizon", opts.horizon as f64);
        return Ok((report, Outcome::Success));
    }

    let out = certify(&work, &cs, &built.relations, chart_kind)?;

    let sigma_rank = match sigma {
        None => Value::Null,
        Some(s) => {
            let chart_obj = crate::transversality::build_chart(&work, chart_kind)?;
            let basis = crate::ratmap::tangent_basis(&work, &cs, &chart_obj)?;
            let scaled = relation_jacobian(&work, &cs, &built.relations, &basis, Some(s), "sigma")?;
            Value::from(scaled.certified_rank)
        }
    };

    let results = json!({
        "relations": relations_json(&built.relations),
        "expected_rank": out.expected_rank,
        "jacobian": jacobian_report_json(&out.report),
        "certified": out.certified,
        "kernel_dim": out.kernel_dim,
        "conjugacy_in_kernel": out.conjugacy_in_kernel,
        "kernel_vectors": out.kernel_vectors.iter().map(|v| {
            Value::Array(v.iter().map(|z| complex_json(*z)).collect())
        }).collect::<Vec<_>>(),
        "conjugated": conjugated,
        "sigma_rank": sigma_rank,
    });
    let outcome = if out.certified {
        Outcome::Success
    } else {
        Outcome::CertifiedNegative
    };
    let report = Report::new("certify", spec, results)
        .tolerance("tol", opts.tol)
        .tolerance("horizon", opts.horizon as f64)
        .tolerance("rank_gap_threshold", crate::util::RANK_GAP_THRESHOLD);
    Ok((report, outcome))
}

// ---------------------------------------------------------------------------
// pushforward
// ---------------------------------------------------------------------------

pub fn cmd_pushforward(
    spec: &str,
    rel: &CriticalRelation,
    opts: Options,
) -> Result<(Report, Outcome)> {
    let map = match parse_spec(spec)? {
        MapInput::Map(map) => map,
        MapInput::Symbolic(_) => {
            return Err(Error::InvalidInput(
                "push-forward needs a numeric map".into(),
            ))
        }
    };
    // all orbit points entering the differential must be finite; polynomial
    // maps keep their own (finite) critical points and indexing, rational
    // maps are moved off infinity first
    let (work, conjugated) = if map.is_polynomial() {
        (map, false)
    } else {
        let form = ensure_finite_critical_orbits(&map, 1e-12, rel.m.max(rel.n) + 4, opts.seed)?;
        (form.map, form.conjugated)
    };
    let cs = numeric_critical_set(&work)?;
    if rel.i > cs.nu() || rel.j > cs.nu() {
        return Err(Error::InvalidInput(format!(
            "relation indices exceed nu = {}",
            cs.nu()
        )));
    }
    let crit: Vec<Pt> = cs.points.iter().map(|&(p, _)| p).collect();
    let q = relation_qdiff(&work, &crit, rel)?;
    let samples = sample_points(&work, &q, opts.samples, opts.seed);
    let residual = if q.is_zero() {
        0.0
    } else {
        invariance_residual(&work, &q, &samples)?
    };
    let (m0, m1, m2) = q.infinity_moments();

    let results = json!({
        "relation": json!([rel.i, rel.j, rel.m, rel.n]),
        "qdiff": quad_diff_json(&q),
        "zero": q.is_zero(),
        "invariance_residual": residual,
        "moments": [complex_json(m0), complex_json(m1), complex_json(m2)],
        "samples": samples.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
        "conjugated": conjugated,
    });
    let report = Report::new("pushforward", spec, results)
        .tolerance("tol", opts.tol)
        .tolerance("samples", opts.samples as f64)
        .tolerance("seed", opts.seed as f64);
    Ok((report, Outcome::Success))
}

// ---------------------------------------------------------------------------
// lattes-demo
// ---------------------------------------------------------------------------

pub fn cmd_lattes_demo(a: Complex64, opts: Options) -> Result<(Report, Outcome)> {
    let demo = degeneracy_demo(a, 1e-8, opts.seed)?;
    let (m0, m1, m2) = demo.moments;
    let results = json!({
        "a": complex_json(a),
        "relations": relations_json(&demo.relations),
        "expected_rank": demo.expected_rank,
        "jacobian": jacobian_report_json(&demo.outcome.report),
        "rank_deficient": !demo.outcome.certified,
        "kernel_vector": demo.kernel_vector.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
        "kernel_residual": demo.kernel_residual,
        "qdiff": quad_diff_json(&demo.qdiff),
        "invariance_residual": demo.invariance_residual,
        "moments": [complex_json(m0), complex_json(m1), complex_json(m2)],
        "family_direction_in_kernel": demo.family_direction_in_kernel,
    });
    let report = Report::new("lattes-demo", &format!("lattes:a={a}"), results)
        .tolerance("structure_tol", 1e-8)
        .tolerance("seed", opts.seed as f64);
    Ok((report, Outcome::Success))
}

// ---------------------------------------------------------------------------
// deficit-check
// ---------------------------------------------------------------------------

pub fn cmd_deficit_check(
    spec: &str,
    rel: Option<CriticalRelation>,
    threshold: f64,
    opts: Options,
) -> Result<(Report, Outcome)> {
    let map = match parse_spec(spec)? {
        MapInput::Map(map) => map,
        MapInput::Symbolic(_) => {
            return Err(Error::InvalidInput(
                "the identity check needs a numeric map".into(),
            ))
        }
    };
    if !map.is_polynomial() {
        return Err(Error::InvalidInput(
            "the critical-value chart identity is implemented for polynomial maps".into(),
        ));
    }
    let rel = match rel {
        Some(r) => r,
        None => {
            let mut model = OrbitModel::numeric(&map, opts.tol, opts.horizon)?;
            let built = build_proper(&mut model)?;
            *built
                .relations
                .first()
                .ok_or_else(|| Error::InvalidInput("no realized relation found to check".into()))?
        }
    };
    let cs = critical_set_polynomial(&map, crate::util::ROOT_CLUSTER_TOL)?;
    let crit: Vec<Pt> = cs.points.iter().map(|&(p, _)| p).collect();
    let q = relation_qdiff(&map, &crit, &rel)?;
    let samples = sample_points(&map, &q, opts.samples.clamp(4, 10), opts.seed);
    let worst = deficit_identity_check(&map, &rel, &samples)?;
    let pass = worst <= threshold;
    let results = json!({
        "relation": json!([rel.i, rel.j, rel.m, rel.n]),
        "max_mismatch": worst,
        "threshold": threshold,
        "pass": pass,
        "samples": samples.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
    });
    let outcome = if pass {
        Outcome::Success
    } else {
        Outcome::CertifiedNegative
    };
    let report = Report::new("deficit-check", spec, results)
        .tolerance("threshold", threshold)
        .tolerance("seed", opts.seed as f64);
    Ok((report, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_spec_fixtures_and_json() {
        assert!(matches!(
            parse_spec("chebyshev2").unwrap(),
            MapInput::Map(_)
        ));
        assert!(matches!(parse_spec("fig1").unwrap(), MapInput::Symbolic(_)));
        assert!(matches!(
            parse_spec("lattes:a=2+0i").unwrap(),
            MapInput::Map(_)
        ));
        let inline = r#"{"numerator": [[-2.0,0.0],[0.0,0.0],[1.0,0.0]]}"#;
        match parse_spec(inline).unwrap() {
            MapInput::Map(m) => assert_eq!(m.degree(), 2),
            _ => panic!("expected a map"),
        }
        let symbolic = r#"{"nu": 2, "generators": [[2,1,1,2]], "landings": []}"#;
        assert!(matches!(
            parse_spec(symbolic).unwrap(),
            MapInput::Symbolic(_)
        ));
        assert!(parse_spec("no_such_fixture").is_err());
    }

    #[test]
    fn analyze_reports_orbit_and_zeta() {
        let (report, outcome) = cmd_analyze("chebyshev2", Options::default()).unwrap();
        assert_eq!(outcome, Outcome::Success);
        assert_eq!(report.results["nu"], 1);
        let orbit = &report.results["orbits"][0];
        assert_eq!(orbit[0], serde_json::json!([0.0, 0.0]));
        assert_eq!(orbit[1], serde_json::json!([-2.0, 0.0]));

        let (fig1, _) = cmd_analyze("fig1", Options::default()).unwrap();
        assert_eq!(fig1.results["nu"], 9);
        assert_eq!(fig1.results["zeta"], 3);
    }

    #[test]
    fn relations_command_matches_library() {
        let (report, _) = cmd_relations("chebyshev2", Options::default()).unwrap();
        assert_eq!(
            report.results["proper_collection"],
            serde_json::json!([[1, 1, 3, 2]])
        );
        assert_eq!(report.results["zeta"], 0);
    }

    #[test]
    fn certify_command_quadratic_and_lattes() {
        let (report, outcome) =
            cmd_certify("chebyshev2", "auto", None, Options::default()).unwrap();
        assert_eq!(outcome, Outcome::Success);
        assert_eq!(report.results["expected_rank"], 1);
        assert_eq!(report.results["jacobian"]["rank"], 1);

        let (lattes, outcome) =
            cmd_certify("lattes:a=2+0i", "auto", None, Options::default()).unwrap();
        assert_eq!(outcome, Outcome::CertifiedNegative);
        assert_eq!(lattes.results["certified"], serde_json::json!(false));
        assert!(!lattes.results["kernel_vectors"]
            .as_array()
            .unwrap()
            .is_empty());
    }

    #[test]
    fn certify_rejects_symbolic_and_bad_chart() {
        assert!(cmd_certify("fig1", "auto", None, Options::default()).is_err());
        assert!(cmd_certify("chebyshev2", "warped", None, Options::default()).is_err());
        assert!(cmd_certify("lattes:a=2+0i", "poly", None, Options::default()).is_err());
    }

    #[test]
    fn pushforward_command_residuals() {
        let rel = CriticalRelation::new(1, 1, 3, 2).unwrap();
        let (report, _) = cmd_pushforward("chebyshev2", &rel, Options::default()).unwrap();
        let residual = report.results["invariance_residual"].as_f64().unwrap();
        assert!(residual >= 0.1);

        // unit-offset relation: zero differential notice
        let rel11 = CriticalRelation::new(1, 1, 1, 1).unwrap();
        let (zero_rep, _) = cmd_pushforward("chebyshev2", &rel11, Options::default()).unwrap();
        assert_eq!(zero_rep.results["zero"], serde_json::json!(true));
        assert_eq!(
            zero_rep.results["invariance_residual"].as_f64().unwrap(),
            0.0
        );
    }

    #[test]
    fn deficit_check_command() {
        let (report, outcome) =
            cmd_deficit_check("chebyshev2", None, 1e-5, Options::default()).unwrap();
        assert_eq!(outcome, Outcome::Success);
        assert_eq!(report.results["pass"], serde_json::json!(true));
        assert!(cmd_deficit_check("lattes:a=2+0i", None, 1e-5, Options::default()).is_err());
    }

    #[test]
    fn reports_are_byte_identical_across_reruns() {
        let opts = Options::default();
        let (a, _) = cmd_certify("misiurewicz_i", "auto", None, opts).unwrap();
        let (b, _) = cmd_certify("misiurewicz_i", "auto", None, opts).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let ra = cmd_pushforward(
            "chebyshev2",
            &CriticalRelation::new(1, 1, 3, 2).unwrap(),
            opts,
        )
        .unwrap()
        .0
        .to_json();
        let rb = cmd_pushforward(
            "chebyshev2",
            &CriticalRelation::new(1, 1, 3, 2).unwrap(),
            opts,
        )
        .unwrap()
        .0
        .to_json();
        assert_eq!(ra, rb);
    }
}
