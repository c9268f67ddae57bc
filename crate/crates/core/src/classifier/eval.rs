use std::fmt::Write as _;
use std::io::Write;

use super::{Model, CLASSES};
use crate::features::LabeledVector;
use crate::frame::AttackLabel;

/// Held-out metrics. FPR and TPR treat the problem as intrusion versus
/// normal: any attack class counts as positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: u64,
    pub accuracy: f64,
    /// Rows are true labels, columns predicted labels, both by class code.
    pub confusion: [[u64; CLASSES]; CLASSES],
    pub fpr: f64,
    pub tpr: f64,
}

impl EvalReport {
    pub fn from_confusion(confusion: [[u64; CLASSES]; CLASSES]) -> Self {
        let n: u64 = confusion.iter().flatten().sum();
        let correct: u64 = (0..CLASSES).map(|i| confusion[i][i]).sum();
        let normal = AttackLabel::Normal.index();
        let negatives: u64 = confusion[normal].iter().sum();
        let false_pos = negatives - confusion[normal][normal];
        let positives: u64 = n - negatives;
        let true_pos: u64 = (0..CLASSES).filter(|&i| i != normal).map(|i| positives_of(&confusion[i], normal)).sum();
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        EvalReport {
            n,
            accuracy: ratio(correct, n),
            confusion,
            fpr: ratio(false_pos, negatives),
            tpr: ratio(true_pos, positives),
        }
    }

    pub fn class_count(&self, label: AttackLabel) -> u64 {
        self.confusion[label.index()].iter().sum()
    }

    /// Recall of one class; 0 when the class is absent.
    pub fn recall(&self, label: AttackLabel) -> f64 {
        let n = self.class_count(label);
        if n == 0 {
            0.0
        } else {
            self.confusion[label.index()][label.index()] as f64 / n as f64
        }
    }

    /// Confusion matrix as an aligned text grid.
    pub fn confusion_table(&self) -> String {
        let mut s = format!("{:<12}", "true\\pred");
        for l in AttackLabel::ALL {
            let _ = write!(s, "{:>12}", l.name());
        }
        s.push('\n');
        for (i, row) in self.confusion.iter().enumerate() {
            let _ = write!(s, "{:<12}", AttackLabel::ALL[i].name());
            for c in row {
                let _ = write!(s, "{c:>12}");
            }
            s.push('\n');
        }
        s
    }
}

fn positives_of(row: &[u64; CLASSES], normal: usize) -> u64 {
    row.iter().enumerate().filter(|&(j, _)| j != normal).map(|(_, c)| c).sum()
}

pub fn evaluate(model: &Model, test: &[LabeledVector]) -> EvalReport {
    let mut confusion = [[0u64; CLASSES]; CLASSES];
    for lv in test {
        confusion[lv.label.index()][model.predict(&lv.features).index()] += 1;
    }
    EvalReport::from_confusion(confusion)
}

/// One line of the classifier comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub classifier: String,
    pub report: EvalReport,
    pub model_bytes: usize,
}

/// Comparison table with one row per classifier: accuracy, FPR, TPR and
/// serialized size.
pub fn format_table(rows: &[TableRow]) -> String {
    let mut s = format!("{:<22}{:>10}{:>10}{:>10}{:>12}\n", "Classifier", "Accuracy", "FPR", "TPR", "Size (B)");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<22}{:>10.5}{:>10.5}{:>10.5}{:>12}",
            r.classifier, r.report.accuracy, r.report.fpr, r.report.tpr, r.model_bytes
        );
    }
    s
}

pub fn write_table_csv<W: Write>(out: W, rows: &[TableRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["classifier", "n", "accuracy", "fpr", "tpr", "model_bytes"])?;
    for r in rows {
        w.write_record([
            r.classifier.clone(),
            r.report.n.to_string(),
            r.report.accuracy.to_string(),
            r.report.fpr.to_string(),
            r.report.tpr.to_string(),
            r.model_bytes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
