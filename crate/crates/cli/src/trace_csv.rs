//! CSV and summary rendering of a simulation trace.

use adsafe_core::simnet::SimulationTrace;

pub const MOTES_HEADER: [&str; 8] = ["interval", "mote", "alive", "energy_j", "pcp", "roc", "is_hacp", "selected_peer"];
pub const PAIRS_HEADER: [&str; 7] = ["interval", "src", "dst", "engine_metric", "t", "c", "T"];

fn real(v: f64) -> String {
    format!("{v:.6}")
}

fn flag(b: bool) -> String {
    (b as u8).to_string()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn motes_csv(trace: &SimulationTrace) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(MOTES_HEADER)?;
    for interval in &trace.intervals {
        for m in &interval.motes {
            w.write_record([
                interval.index.to_string(),
                m.addr.to_string(),
                flag(m.alive),
                real(m.energy_j),
                opt(m.pcp),
                opt(m.roc),
                flag(m.is_hacp),
                opt(m.selected_peer),
            ])?;
        }
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn pairs_csv(trace: &SimulationTrace) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PAIRS_HEADER)?;
    for interval in &trace.intervals {
        for p in &interval.pairs {
            let (t, c, tw) = match p.record {
                Some(r) => (real(r.t), real(r.c), real(r.trustworthiness)),
                None => Default::default(),
            };
            w.write_record([
                interval.index.to_string(),
                p.src.to_string(),
                p.dst.to_string(),
                real(p.engine_metric),
                t,
                c,
                tw,
            ])?;
        }
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn summary(trace: &SimulationTrace) -> String {
    let system = trace
        .final_system_trustworthiness()
        .map(real)
        .unwrap_or_else(|| "n/a".to_string());
    format!(
        "engine: {}\nintervals: {}\nsystem_trustworthiness: {}\nhacp_rotations: {}\nmote_deaths: {}\nmean_theta_s: {}\nservice_gaps: {}\n",
        trace.engine.name(),
        trace.intervals.len(),
        system,
        trace.hacp_rotations(),
        trace.deaths(),
        real(trace.mean_theta()),
        trace.gap_intervals(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use adsafe_core::simnet::{run, Scenario, TrustEngine};

    fn lines(bytes: &[u8]) -> Vec<String> {
        String::from_utf8(bytes.to_vec()).unwrap().lines().map(str::to_string).collect()
    }

    #[test]
    fn headers_are_exact() {
        let trace = run(&Scenario {
            motes: 3,
            intervals: 2,
            ..Scenario::default()
        })
        .unwrap();
        assert_eq!(lines(&motes_csv(&trace).unwrap())[0], "interval,mote,alive,energy_j,pcp,roc,is_hacp,selected_peer");
        assert_eq!(lines(&pairs_csv(&trace).unwrap())[0], "interval,src,dst,engine_metric,t,c,T");
    }

    #[test]
    fn row_counts_match_dimensions() {
        let trace = run(&Scenario {
            motes: 5,
            intervals: 4,
            ..Scenario::default()
        })
        .unwrap();
        assert_eq!(lines(&motes_csv(&trace).unwrap()).len(), 1 + 5 * 4);
        let pairs: usize = trace.intervals.iter().map(|r| r.pairs.len()).sum();
        assert_eq!(lines(&pairs_csv(&trace).unwrap()).len(), 1 + pairs);
    }

    #[test]
    fn qad_leaves_beta_columns_empty() {
        let trace = run(&Scenario {
            motes: 3,
            intervals: 1,
            ..Scenario::default()
        })
        .unwrap();
        let rows = lines(&pairs_csv(&trace).unwrap());
        assert!(rows.len() > 1);
        for row in &rows[1..] {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(&cols[4..], ["", "", ""]);
            assert_eq!(cols[3].split('.').nth(1).unwrap().len(), 6);
        }
    }

    #[test]
    fn beta_fills_every_column_with_six_digits() {
        let trace = run(&Scenario {
            motes: 3,
            intervals: 2,
            engine: TrustEngine::Beta,
            ..Scenario::default()
        })
        .unwrap();
        let rows = lines(&pairs_csv(&trace).unwrap());
        for row in &rows[1..] {
            for col in &row.split(',').collect::<Vec<_>>()[3..] {
                assert_eq!(col.split('.').nth(1).unwrap().len(), 6, "{row}");
            }
        }
        assert!(summary(&trace).contains("system_trustworthiness: 0."));
    }

    #[test]
    fn qad_summary_has_no_system_value() {
        let trace = run(&Scenario {
            motes: 2,
            intervals: 1,
            ..Scenario::default()
        })
        .unwrap();
        assert!(summary(&trace).contains("system_trustworthiness: n/a"));
    }
}
