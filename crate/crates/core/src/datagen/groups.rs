use std::collections::BTreeMap;
use std::path::Path;

use super::dataset::{Block, Dataset, DatasetMeta, GroupDecl};
use crate::binio::read_file;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Load a group-annotated table.
///
/// Columns `label` (0/1) and `group` (non-negative integer) are required;
/// an optional `in_group` column (0/1, constant within a group) declares the
/// in-group / out-group partition. Every other column is a numeric feature,
/// in header order, exposed as one block named `all`.
pub fn load_group_table(path: &Path) -> Result<Dataset> {
    let bytes = read_file(path)?;
    parse_group_table(&path.display().to_string(), &bytes)
}

pub fn parse_group_table(name: &str, bytes: &[u8]) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::format_at_line(name, 1, format!("unreadable header: {e}")))?
        .clone();
    let find = |col: &str| headers.iter().position(|h| h == col);
    let label_col =
        find("label").ok_or_else(|| Error::format_at_line(name, 1, "missing `label` column"))?;
    let group_col =
        find("group").ok_or_else(|| Error::format_at_line(name, 1, "missing `group` column"))?;
    let in_group_col = find("in_group");
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != label_col && c != group_col && Some(c) != in_group_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::format_at_line(name, 1, "no feature columns"));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    let mut membership: BTreeMap<u32, Option<bool>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::format_at_line(name, line, format!("unparseable row: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(Error::format_at_line(
                name,
                line,
                format!("{} fields, header has {}", record.len(), headers.len()),
            ));
        }
        for &c in &feature_cols {
            let v: f64 = record[c].parse().map_err(|_| {
                Error::format_at_line(
                    name,
                    line,
                    format!("non-numeric value `{}` in column `{}`", &record[c], &headers[c]),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::format_at_line(name, line, format!("non-finite value in `{}`", &headers[c])));
            }
            values.push(v);
        }
        let label = match &record[label_col] {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(Error::format_at_line(name, line, format!("label `{other}` is not 0 or 1")))
            }
        };
        let group: u32 = record[group_col].parse().map_err(|_| {
            Error::format_at_line(name, line, format!("group `{}` is not a non-negative integer", &record[group_col]))
        })?;
        let in_group = match in_group_col.map(|c| &record[c]) {
            None => None,
            Some("1") | Some("true") => Some(true),
            Some("0") | Some("false") => Some(false),
            Some(other) => {
                return Err(Error::format_at_line(name, line, format!("in_group `{other}` is not 0 or 1")))
            }
        };
        match membership.get(&group) {
            Some(prev) if *prev != in_group => {
                return Err(Error::format_at_line(
                    name,
                    line,
                    format!("group {group} has inconsistent in_group flags"),
                ))
            }
            _ => {
                membership.insert(group, in_group);
            }
        }
        labels.push(label);
        groups.push(group);
    }
    if labels.is_empty() {
        return Err(Error::format_at_line(name, 2, "no data rows"));
    }

    let d = feature_cols.len();
    let features = Matrix::from_vec(labels.len(), d, values)?;
    let params = serde_json::json!({
        "source": name,
        "columns": feature_cols.iter().map(|&c| &headers[c]).collect::<Vec<_>>(),
    });
    let mut meta = DatasetMeta::for_generator("group-table", params, 0);
    meta.group_table = Some(
        membership
            .into_iter()
            .map(|(id, in_group)| GroupDecl {
                id,
                name: format!("group-{id}"),
                in_group,
            })
            .collect(),
    );
    Dataset::new(features, labels, Some(groups), vec![Block::new("all", 0, d)], meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_two_groups() {
        let csv = "x1,x2,label,group\n0.5,1,0,0\n-1,2.5,1,1\n3,4,1,0\n";
        let ds = parse_group_table("t", csv.as_bytes()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.groups.as_deref(), Some(&[0, 1, 0][..]));
        assert_eq!(ds.labels, vec![0, 1, 1]);
        assert_eq!(ds.row(1), &[-1.0, 2.5]);
        assert_eq!(ds.blocks, vec![Block::new("all", 0, 2)]);
    }

    #[test]
    fn in_group_column_declares_partition() {
        let csv = "label,group,in_group,f\n0,0,1,0.1\n1,3,0,0.2\n1,0,1,0.3\n";
        let ds = parse_group_table("t", csv.as_bytes()).unwrap();
        let table = ds.meta.group_table.unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table[0].in_group, Some(true));
        assert_eq!(table[1].in_group, Some(false));
        let bad = "label,group,in_group,f\n0,0,1,0.1\n1,0,0,0.2\n";
        assert!(parse_group_table("t", bad.as_bytes()).is_err());
    }

    #[test]
    fn missing_group_column() {
        let err = parse_group_table("t", b"x,label\n1,0\n").unwrap_err().to_string();
        assert!(err.contains("group"), "{err}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let csv = "x,label,group\n1,0,0\nabc,1,0\n";
        let err = parse_group_table("t", csv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let csv = "x,label,group\n1,0,0\n1,2,0\n";
        assert!(parse_group_table("t", csv.as_bytes()).unwrap_err().to_string().contains("line 3"));
        let csv = "x,label,group\n1,0\n";
        assert!(parse_group_table("t", csv.as_bytes()).is_err());
    }

    #[test]
    fn wide_table_single_block() {
        let header: Vec<String> = (0..1568).map(|i| format!("p{i}")).chain(["label".into(), "group".into()]).collect();
        let row: Vec<String> = (0..1568).map(|_| "0.5".to_string()).chain(["1".into(), "2".into()]).collect();
        let csv = format!("{}\n{}\n", header.join(","), row.join(","));
        let ds = parse_group_table("t", csv.as_bytes()).unwrap();
        assert_eq!(ds.blocks, vec![Block::new("all", 0, 1568)]);
    }
}
