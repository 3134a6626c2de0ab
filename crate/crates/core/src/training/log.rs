use serde::Serialize;

pub const TRAIN_LOG_SCHEMA: &str = "sst.trainlog/v1";
pub const TRAIN_LOG_COLUMNS: &str = "epoch,l_pred,l_faith,l_card,train_acc,val_acc,mean_size_pct,seconds";

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_pred: f64,
    pub l_faith: f64,
    pub l_card: f64,
    /// Percent.
    pub train_acc: f64,
    /// Percent.
    pub val_acc: f64,
    pub mean_size_pct: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// CSV with a leading `# schema=` line, then the fixed column header.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# schema={TRAIN_LOG_SCHEMA}\n{TRAIN_LOG_COLUMNS}\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.epoch, r.l_pred, r.l_faith, r.l_card, r.train_acc, r.val_acc, r.mean_size_pct, r.seconds
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape() {
        let log = TrainLog {
            records: vec![EpochRecord {
                epoch: 1,
                l_pred: 0.5,
                l_faith: 0.25,
                l_card: 3.0,
                train_acc: 90.0,
                val_acc: 89.5,
                mean_size_pct: 12.5,
                seconds: 0.0,
            }],
        };
        let csv = log.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# schema=sst.trainlog/v1");
        assert_eq!(lines[1], "epoch,l_pred,l_faith,l_card,train_acc,val_acc,mean_size_pct,seconds");
        assert_eq!(lines[2], "1,0.5,0.25,3,90,89.5,12.5,0");
    }
}
