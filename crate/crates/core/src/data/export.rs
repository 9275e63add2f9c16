use std::io::Write;

use ndarray::ArrayView2;

use super::split::{DataSplit, Diagnostics};
use crate::error::Result;

/// Writes a split as CSV: `feature_0..feature_{D-1},label,split`.
///
/// The `split` column is `labeled`, `unlabeled` or `test`. Unlabeled rows
/// have an empty label unless `diagnostics` is given.
pub fn write_split_csv<W: Write>(
    split: &DataSplit,
    writer: W,
    diagnostics: Option<Diagnostics>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..split.dim()).map(|i| format!("feature_{i}")).collect();
    header.push("label".into());
    header.push("split".into());
    w.write_record(&header)?;

    let mut emit = |x: ArrayView2<'_, f64>, labels: Option<&[usize]>, tag: &str| -> Result<()> {
        for (i, row) in x.rows().into_iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(labels.map(|l| l[i].to_string()).unwrap_or_default());
            rec.push(tag.to_string());
            w.write_record(&rec)?;
        }
        Ok(())
    };
    emit(split.labeled_x.view(), Some(&split.labeled_y), "labeled")?;
    emit(
        split.unlabeled_x.view(),
        diagnostics.map(|d| split.hidden_labels(d)),
        "unlabeled",
    )?;
    emit(split.test_x.view(), Some(&split.test_y), "test")?;
    w.flush()?;
    Ok(())
}
