//! Machine-readable simulation outputs: per-phase metrics CSV, a summary
//! JSON document, and the optional per-click trajectory dump.

use serde::Serialize;

use super::{SimConfig, SimResult};

/// CSV with one row per phase: `phase,length,delta_x,delta_r`.
pub fn metrics_csv(result: &SimResult) -> String {
    let mut out = String::from("phase,length,delta_x,delta_r\n");
    for (k, ((dx, dr), len)) in result
        .delta_x
        .iter()
        .zip(&result.delta_r)
        .zip(result.schedule.lengths())
        .enumerate()
    {
        out.push_str(&format!("{},{},{},{}\n", k + 1, len, dx, dr));
    }
    out
}

/// Summary JSON: `{"mean_delta_x":., "mean_delta_r":., "config":{..}}`.
pub fn summary_json(result: &SimResult, config: &SimConfig) -> String {
    #[derive(Serialize)]
    struct Summary<'a> {
        mean_delta_x: f64,
        mean_delta_r: f64,
        config: &'a SimConfig,
    }
    serde_json::to_string(&Summary {
        mean_delta_x: result.mean_delta_x,
        mean_delta_r: result.mean_delta_r,
        config,
    })
    .expect("summary serialization cannot fail")
}

/// Per-click CSV: `t,phase,i_clicked,x_0..x_{n-1}`. Requires a result
/// produced with trajectory recording; returns `None` otherwise.
pub fn trajectories_csv(result: &SimResult) -> Option<String> {
    let records = result.trajectories.as_ref()?;
    let n = result.schedule.distributions()[0].len();
    let mut out = String::from("t,phase,i_clicked");
    for i in 0..n {
        out.push_str(&format!(",x_{i}"));
    }
    out.push('\n');
    for point in records {
        out.push_str(&format!("{},{},{}", point.t, point.phase, point.clicked));
        for coord in &point.x {
            out.push_str(&format!(",{coord}"));
        }
        out.push('\n');
    }
    Some(out)
}
