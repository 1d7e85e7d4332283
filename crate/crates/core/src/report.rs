//! JSON and CSV serialization of a nest together with its geometry,
//! return graph and suite results.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{landing_ratios, nest_geometry, orders, GraphNode, LandingRatios, LevelGeometry, ReturnGraph};
use crate::nest::{Cascade, NestResult, Termination};
use crate::scalar::Real;
use crate::verify::{nest_suites, SuiteReport};

pub const CSV_HEADER: [&str; 12] = [
    "n",
    "mu",
    "lambda",
    "lambda_star",
    "alpha",
    "K",
    "rho",
    "kappa",
    "in_L",
    "r_n",
    "interval_count",
    "omega_n",
];

/// Everything that varies between identical runs lives here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub timestamp: Option<String>,
}

impl Meta {
    pub fn current(timestamp: Option<String>) -> Self {
        Self {
            tool: "nestlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    /// `c` at full working precision.
    pub c: String,
    pub digits: usize,
    pub bits: u32,
    pub depth: usize,
    pub horizon_mult: usize,
    pub seed: u64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub n: usize,
    /// `ordⁿ_l` for `l = 0 .. n-1`.
    pub ord: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: Vec<GraphNode>,
    /// Node indices; one entry per counted return, so repeats are kept.
    pub edges: Vec<Vec<usize>>,
    pub complete: Vec<bool>,
    pub ranks: Vec<Option<usize>>,
    pub orders: Vec<OrderRow>,
}

impl GraphSummary {
    pub fn of<T: Real>(nest: &NestResult<T>) -> Result<Self> {
        let graph = ReturnGraph::from_nest(nest)?;
        let ranks = graph.ranks();
        let mut rows = Vec::new();
        for n in 1..=nest.depth() {
            let ord = (0..n).map_while(|l| orders(nest, n, l).ok()).collect();
            rows.push(OrderRow { n, ord });
        }
        Ok(Self {
            nodes: graph.nodes,
            edges: graph.edges,
            complete: graph.complete,
            ranks,
            orders: rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub meta: Meta,
    pub parameter: Parameter,
    pub termination: Termination,
    pub levels: Vec<LevelGeometry<T>>,
    pub cascades: Vec<Cascade>,
    pub graph: GraphSummary,
    pub suites: Vec<SuiteReport>,
    /// Landing ratios `|U|/|L|`, `|U|/|R|` per level, never gated.
    pub diagnostics: Vec<LandingRatios<T>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub horizon_mult: usize,
    pub seed: u64,
    pub samples: usize,
    pub n0: usize,
    pub suites: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            horizon_mult: 2,
            seed: 1,
            samples: crate::dynamics::DEFAULT_SAMPLES,
            n0: 4,
            suites: true,
        }
    }
}

pub fn build_report<T: Real>(nest: &NestResult<T>, opts: &ReportOptions) -> Result<Report<T>> {
    let levels = nest_geometry(nest, opts.samples)?;
    let graph = GraphSummary::of(nest)?;
    let diagnostics = (2..=nest.depth())
        .filter_map(|n| landing_ratios(nest, n).ok().flatten())
        .collect();
    let suites = if opts.suites {
        nest_suites(nest, &levels, opts.n0)
    } else {
        Vec::new()
    };
    let digits = nest.c.full_digits();
    let mut notes = vec![
        "K, lambda, alpha and rho are taken over the intervals the critical orbit visits within the horizon".to_string(),
    ];
    if levels.iter().any(|g| g.alpha_unbounded) {
        notes.push("alpha is infinite on levels with alpha_unbounded".into());
    }
    Ok(Report {
        meta: Meta::current(None),
        parameter: Parameter {
            c: nest.c.to_decimal(digits),
            digits,
            bits: nest.bits,
            depth: nest.depth(),
            horizon_mult: opts.horizon_mult,
            seed: opts.seed,
            samples: opts.samples,
        },
        termination: nest.termination.clone(),
        levels,
        cascades: nest.cascades.clone(),
        graph,
        suites,
        diagnostics,
        notes,
    })
}

impl<T: Real> Report<T> {
    /// True when every suite passed.
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.pass)
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).map_err(|e| Error::Bookkeeping(e.to_string()))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(&self.levels, out)
    }
}

fn opt<T: Real>(x: Option<&T>) -> String {
    x.map(|v| v.to_decimal(v.full_digits())).unwrap_or_default()
}

/// One row per level; absent values are empty cells and an unbounded
/// `α` is written `inf`.
pub fn write_csv<T: Real, W: Write>(levels: &[LevelGeometry<T>], out: W) -> Result<()> {
    let err = |e: csv::Error| Error::Bookkeeping(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(err)?;
    for g in levels {
        let alpha = if g.alpha_unbounded {
            "inf".to_string()
        } else {
            opt(g.alpha.as_ref())
        };
        w.write_record([
            g.n.to_string(),
            opt(Some(&g.mu)),
            opt(g.lambda.as_ref()),
            opt(g.lambda_star.as_ref()),
            alpha,
            opt(g.k.as_ref().map(|k| &k.value)),
            opt(g.rho.as_ref().map(|r| &r.value)),
            g.kappa.to_string(),
            g.in_l.to_string(),
            g.r_n.to_string(),
            g.interval_count.to_string(),
            opt(g.omega.as_ref()),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Bookkeeping(e.to_string()))
}

pub fn csv_string<T: Real>(levels: &[LevelGeometry<T>]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(levels, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Bookkeeping(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::QuadraticMap;
    use crate::nest::{build_nest, NestConfig};
    use crate::precision::{BigReal, PrecisionContext};

    fn report(c: &str, depth: usize) -> Report<BigReal> {
        let ctx = PrecisionContext::new(256, 32, 1).unwrap();
        let map = QuadraticMap::from_decimal(c, ctx).unwrap();
        let nest = build_nest(
            &map,
            &NestConfig {
                depth,
                ..NestConfig::default()
            },
        );
        build_report(&nest, &ReportOptions::default()).unwrap()
    }

    #[test]
    fn csv_header_and_rows() {
        let r = report("-1.8705286321646448888906174192698158530716", 6);
        let text = csv_string(&r.levels).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 6);
        let row2: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(row2.len(), 12);
        assert_eq!(row2[0], "2");
        assert_eq!(row2[7], "2");
        assert_eq!(row2[8], "true");
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let r = report("-1.8705286321646448888906174192698158530716", 8);
        let a = r.to_json().unwrap();
        let b = report("-1.8705286321646448888906174192698158530716", 8).to_json().unwrap();
        assert_eq!(a, b);
        let back: Report<BigReal> = serde_json::from_str(&a).unwrap();
        assert_eq!(back.levels.len(), 8);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        // Decimals are exact at the recorded precision.
        let bits = v["parameter"]["bits"].as_u64().unwrap() as u32;
        for (i, g) in r.levels.iter().enumerate() {
            let s = v["levels"][i]["mu"].as_str().unwrap();
            assert_eq!(BigReal::parse(s, bits).unwrap(), g.mu);
        }
        for key in ["meta", "parameter", "termination", "levels", "cascades", "graph", "suites"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["levels"][2].get("K").is_some());
        assert!(r.passed());
    }

    #[test]
    fn renormalizable_report() {
        let r = report("-1", 10);
        assert_eq!(r.termination.name(), "renormalizable");
        let text = r.to_json().unwrap();
        assert!(text.contains("\"reason\": \"renormalizable\""));
    }
}
