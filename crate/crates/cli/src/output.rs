//! Number formatting and the files a run writes.

use serde_json::Value;
use sps_core::model::ShipScenario;
use sps_core::problem::part_loads;
use sps_core::fault::IslandPartition;
use sps_core::schedule::Schedule;

/// Rounds to six significant digits.
pub fn round6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Six significant digits, plain notation where that stays readable.
pub fn fmt6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let r = round6(x);
    if r == 0.0 {
        return "0".into();
    }
    let mag = r.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{r:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{r:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rounds every float in a JSON tree so reruns compare equal.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round6).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn csv_line<I: IntoIterator<Item = String>>(cells: I) -> String {
    let cells: Vec<String> = cells
        .into_iter()
        .map(|c| {
            if c.contains([',', '"', '\n']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c
            }
        })
        .collect();
    cells.join(",") + "\n"
}

/// Per-interval series of a schedule, one row per interval.
pub fn series_csv(s: &ShipScenario, part: &IslandPartition, x: &Schedule) -> String {
    let loads = part_loads(s, part);
    let mut header = vec!["t".to_string()];
    header.extend(s.generators.iter().map(|g| format!("p_g_{}", g.id)));
    header.extend(s.esms.iter().map(|e| format!("p_e_{}", e.id)));
    header.extend(s.esms.iter().map(|e| format!("e_{}", e.id)));
    header.extend(["p_pr", "speed", "load_vs", "load_nonvital", "shed"].map(String::from));
    let mut out = csv_line(header);
    for t in 0..s.horizon() {
        let mut row = vec![t.to_string()];
        row.extend(x.p_g.iter().map(|r| fmt6(r[t])));
        row.extend(x.p_e.iter().map(|r| fmt6(r[t])));
        row.extend(x.e_e.iter().map(|r| fmt6(r[t])));
        let shed: f64 = (0..part.parts.len()).map(|w| x.rho[w][t] * loads.nonvital[w][t]).sum();
        row.push(fmt6(x.propulsion_total(t)));
        row.push(fmt6(sps_core::verify::speed(s, x, t)));
        row.push(fmt6(s.loads.total_vs(t)));
        row.push(fmt6(s.loads.total_nonvital(t)));
        row.push(fmt6(shed));
        out += &csv_line(row);
    }
    out
}
