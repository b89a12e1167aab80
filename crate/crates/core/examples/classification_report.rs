//! Per-tag precision/recall/F1, averages, confusion matrices and the
//! results table, from hand-picked predictions.

use dialogue_acts::corpus::TagSet;
use dialogue_acts::eval::{
    f1_score, render_confusion, render_metrics_csv, render_results_table, round_half_up, ConfusionFormat,
    ConfusionOptions, EvalReport, ResultRow, TableFormat,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let id = |l: &str| TagSet::damsl().by_label(l).unwrap().id();
    let (sd, sv, b, qy) = (id("sd"), id("sv"), id("b"), id("qy"));
    let truth = [sd, sd, sd, sd, sv, sv, b, b, b, qy];
    let preds = [sd, sd, sd, sv, sd, sv, b, b, sd, sd];

    let report = EvalReport::from_predictions(&truth, &preds)?;
    println!("accuracy {}", round_half_up(report.accuracy, 4));
    for (name, avg) in [("macro", report.macro_avg), ("weighted", report.weighted_avg)] {
        println!("{name:>8}: P {:.2} R {:.2} F1 {:.2}", avg.precision, avg.recall, avg.f1);
    }
    println!("\nF1 for P=0.51, R=0.92: {}", round_half_up(f1_score(0.51, 0.92), 2));

    let opts = ConfusionOptions { min_support: 1, top_k: None };
    println!("\n{}", String::from_utf8(render_confusion(&report.confusion, ConfusionFormat::Csv, &opts))?);
    let metrics = String::from_utf8(render_metrics_csv(&report))?;
    for line in metrics.lines().filter(|l| l.starts_with("sd,") || l.starts_with("macro") || l.starts_with("weighted")) {
        println!("{line}");
    }

    let out = std::env::temp_dir().join("confusion_example.svg");
    std::fs::write(&out, render_confusion(&report.confusion, ConfusionFormat::Svg, &opts))?;
    println!("\nheatmap written to {}", out.display());

    let rows = [ResultRow {
        model: "USE".into(),
        acc: Some(0.7247),
        val_acc: Some(0.6951),
        test_acc: Some(report.accuracy),
    }];
    print!("\n{}", String::from_utf8(render_results_table(&rows, TableFormat::Text))?);
    Ok(())
}
