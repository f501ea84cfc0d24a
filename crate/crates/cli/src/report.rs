//! JSON renderings of verdicts and results that have no serde form of their own.

use serde_json::{json, Value};

use quantmatch::optimize::Uniqueness;
use quantmatch::verify::Certificate;
use quantmatch::{BoundSide, Implementability, Optimum, Selection, Side, UniqueVerdict};

pub fn implementability(v: &Implementability) -> Value {
    match v {
        Implementability::Yes => json!({ "implementable": true }),
        Implementability::No {
            x,
            limit,
            side,
            gap,
        } => json!({
            "implementable": false,
            "witness": {
                "x": x,
                "limit": match limit { Side::Left => "left", Side::Right => "right" },
                "violated": match side { BoundSide::Lower => "lower", BoundSide::Upper => "upper" },
                "gap": gap,
            },
        }),
    }
}

pub fn selection(s: &Selection) -> Value {
    match s {
        Selection::Path(points) => json!({ "kind": "path", "points": points }),
        Selection::Constant(c) => json!({ "kind": "constant", "state": c }),
        Selection::PerEntry(states) => json!({ "kind": "per_entry", "states": states }),
        Selection::LowestQuantile { q } => json!({ "kind": "lowest_quantile", "q": q }),
        Selection::HighestQuantile { q } => json!({ "kind": "highest_quantile", "q": q }),
        Selection::Function(_) => json!({ "kind": "function" }),
    }
}

pub fn optimum(opt: &Optimum) -> Value {
    let j_star: Vec<[f64; 4]> = opt
        .j_star
        .iter()
        .map(|s| [s.p0, s.p1, s.x0, s.x1])
        .collect();
    let mut out = json!({
        "value": opt.value,
        "h_star": opt.h_star,
        "j_star": j_star,
        "unique": opt.is_unique(),
    });
    if let Uniqueness::NonUnique {
        alternative,
        tie_length,
        ..
    } = &opt.uniqueness
    {
        out["alternative"] = json!(alternative);
        out["tie_length"] = json!(tie_length);
    }
    out
}

pub fn unique_verdict(v: &UniqueVerdict) -> Value {
    match v {
        UniqueVerdict::Unique { checked } => json!({ "unique": true, "checked": checked }),
        UniqueVerdict::NotUnique { label, interval } => json!({
            "unique": false,
            "label": label,
            "interval": interval,
        }),
    }
}

pub fn certificate(c: &Certificate) -> Value {
    match c {
        Certificate::Surplus {
            lo,
            hi,
            entries,
            supply,
            demand,
        } => json!({
            "kind": "surplus",
            "window": [lo, hi],
            "entries": entries,
            "supply": supply,
            "demand": demand,
        }),
        Certificate::Shortage {
            lo,
            hi,
            supply,
            demand,
        } => json!({
            "kind": "shortage",
            "window": [lo, hi],
            "supply": supply,
            "demand": demand,
        }),
        Certificate::NoWholeAssignment { searched_states } => json!({
            "kind": "no_whole_assignment",
            "searched_states": searched_states,
        }),
    }
}
