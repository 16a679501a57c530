//! CSV and JSON report rendering.

use std::fmt::Write as _;

use serde_json::json;
use ssnd_core::diarpost::SweepRow;
use ssnd_core::metrics::{ConditionRow, DerReport, WerReport};

use crate::pipeline::PipelineReport;

/// `shift_ms,tau,der,mi,fa,cf` rows.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("shift_ms,tau,der,mi,fa,cf\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            row.frame_shift_ms,
            row.threshold,
            row.report.der,
            row.report.missed,
            row.report.false_alarm,
            row.report.confusion
        );
    }
    out
}

/// `session,condition,der,mi,fa,cf,cpwer,sub,del,ins` rows.
pub fn session_scores_csv(rows: &[(String, String, DerReport, Option<WerReport>)]) -> String {
    let mut out = String::from("session,condition,der,mi,fa,cf,cpwer,sub,del,ins\n");
    for (session, condition, der, wer) in rows {
        let cpwer_text = wer.map_or(String::from(""), |w| format!("{:.6}", w.wer()));
        let (s, d, i) = wer.map_or((0, 0, 0), |w| (w.substitutions, w.deletions, w.insertions));
        let _ = writeln!(
            out,
            "{session},{condition},{:.6},{:.6},{:.6},{:.6},{cpwer_text},{s},{d},{i}",
            der.der, der.missed, der.false_alarm, der.confusion
        );
    }
    out
}

/// `condition,n_sessions,der,mi,fa,cf,cpwer` rows.
pub fn condition_csv(rows: &[ConditionRow]) -> String {
    let mut out = String::from("condition,n_sessions,der,mi,fa,cf,cpwer\n");
    for row in rows {
        let cpwer_text = row.cpwer.map_or(String::from(""), |w| format!("{w:.6}"));
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{cpwer_text}",
            row.condition, row.n_sessions, row.der, row.missed, row.false_alarm, row.confusion
        );
    }
    out
}

pub fn der_json(report: &DerReport) -> serde_json::Value {
    json!({
        "der": report.der,
        "missed": report.missed,
        "false_alarm": report.false_alarm,
        "confusion": report.confusion,
        "collar_s": report.collar_s,
        "scored_time_s": report.scored_time_s,
    })
}

pub fn wer_json(report: &WerReport) -> serde_json::Value {
    json!({
        "wer": report.wer(),
        "substitutions": report.substitutions,
        "deletions": report.deletions,
        "insertions": report.insertions,
        "n_ref_words": report.n_ref_words,
    })
}

/// Deterministic part of a pipeline report (no timings), suitable for file
/// artifacts.
pub fn pipeline_json(report: &PipelineReport) -> serde_json::Value {
    json!({
        "der": der_json(&report.der),
        "cpwer": report.cpwer.as_ref().map(wer_json),
        "n_decided_intervals": report.decided.len(),
        "reconstruction_max_err": report.reconstruction_max_err,
        "speaker_mapping": report
            .cpwer_mapping
            .iter()
            .map(|(r, h)| json!({ "reference": r, "hypothesis": h }))
            .collect::<Vec<_>>(),
    })
}

/// Stdout variant including per-stage wall-clock timings.
pub fn pipeline_json_with_timings(report: &PipelineReport) -> serde_json::Value {
    let mut value = pipeline_json(report);
    value["timings_ms"] = json!(report
        .timings_ms
        .iter()
        .map(|(stage, ms)| json!({ "stage": stage, "ms": ms }))
        .collect::<Vec<_>>());
    value
}
