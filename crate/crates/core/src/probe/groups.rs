use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::nnet::{Mlp, Scratch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    pub id: u32,
    pub name: String,
    pub in_group: Option<bool>,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub groups: Vec<GroupAccuracy>,
    /// Size-weighted accuracy over declared in-groups.
    pub in_group: Option<f64>,
    /// Size-weighted accuracy over declared out-groups.
    pub out_group: Option<f64>,
    pub worst_group: f64,
}

pub fn group_accuracy(model: &Mlp, ds: &Dataset) -> Result<GroupReport> {
    let tags = ds.groups.as_ref().ok_or(Error::MissingGroups)?;
    let table = ds.meta.group_table.as_ref().ok_or(Error::MissingGroups)?;
    if ds.dim() != model.input_dim() {
        return Err(Error::Shape(format!(
            "dataset has {} features, model expects {}",
            ds.dim(),
            model.input_dim()
        )));
    }
    let mut stats: Vec<GroupAccuracy> = table
        .iter()
        .map(|d| GroupAccuracy {
            id: d.id,
            name: d.name.clone(),
            in_group: d.in_group,
            n: 0,
            correct: 0,
            accuracy: 0.0,
        })
        .collect();
    let mut scratch = Scratch::default();
    for i in 0..ds.len() {
        let slot = stats
            .iter_mut()
            .find(|s| s.id == tags[i])
            .ok_or_else(|| Error::Shape(format!("group {} is not declared", tags[i])))?;
        slot.n += 1;
        if model.predict_with(ds.row(i), &mut scratch) == ds.labels[i] {
            slot.correct += 1;
        }
    }
    stats.retain(|s| s.n > 0);
    for s in &mut stats {
        s.accuracy = s.correct as f64 / s.n as f64;
    }
    let pooled = |flag: bool| {
        let (c, n) = stats
            .iter()
            .filter(|s| s.in_group == Some(flag))
            .fold((0, 0), |(c, n), s| (c + s.correct, n + s.n));
        (n > 0).then(|| c as f64 / n as f64)
    };
    let worst_group = stats.iter().map(|s| s.accuracy).fold(f64::INFINITY, f64::min);
    Ok(GroupReport {
        in_group: pooled(true),
        out_group: pooled(false),
        worst_group,
        groups: stats,
    })
}
