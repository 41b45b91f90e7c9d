use serde::{Deserialize, Serialize};

/// Binary confusion counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn record(&mut self, predicted: u8, label: u8) {
        match (predicted, label) {
            (1, 1) => self.tp += 1,
            (1, _) => self.fp += 1,
            (_, 1) => self.fn_ += 1,
            _ => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
    /// False when `2tp + fp + fn = 0`; `f1` is then reported as 0.
    pub f1_defined: bool,
    pub bce_loss: f64,
    pub confusion: Confusion,
}

impl Metrics {
    pub fn from_confusion(confusion: Confusion, bce_loss: f64) -> Self {
        let c = confusion;
        let total = c.total();
        let accuracy = if total == 0 { 0.0 } else { (c.tp + c.tn) as f64 / total as f64 };
        let denom = 2 * c.tp + c.fp + c.fn_;
        let (f1, f1_defined) = if denom == 0 { (0.0, false) } else { ((2 * c.tp) as f64 / denom as f64, true) };
        Self { accuracy, f1, f1_defined, bce_loss, confusion }
    }
}
