use crate::blackbox::{Classifier, PredictionVector};
use crate::cfgen::{
    nearest_unlike_neighbor, Counterfactual, EngineError, PerturbationKind, PerturbationRecord,
    PerturbationSource, SearchPhase,
};
use crate::dataset::{Label, MtsDataset, MtsInstance};
use crate::scalar::Scalar;

/// Whole-dimension substitution from the nearest unlike neighbor.
///
/// Dimensions are added one at a time, each round keeping the dimension that
/// raises the target score most (ties to the smaller index), until the model
/// predicts `target` or every dimension has been replaced.
pub fn baseline_dim_substitution<F: Scalar>(
    x: &MtsInstance<F>,
    original: &Label,
    target: &Label,
    train: &MtsDataset<F>,
    model: &dyn Classifier<F>,
) -> Result<Counterfactual<F>, EngineError> {
    let mut calls = 0usize;
    let mut predict = |values: Vec<Vec<F>>| {
        calls += 1;
        let inst = x.with_values(values)?;
        let scores = model.predict(&inst)?;
        Ok::<_, EngineError>((inst.into_values(), scores))
    };

    let (mut values, mut scores) = predict(x.values().to_vec())?;
    let mut records = Vec::new();
    let mut phase = SearchPhase::AlreadyTarget;
    let mut valid = scores.argmax() == target;
    if !valid {
        let nun = nearest_unlike_neighbor(x, target, train)?;
        let mut remaining: Vec<usize> = (0..x.dims()).collect();
        while !valid && !remaining.is_empty() {
            let mut best: Option<(usize, Vec<Vec<F>>, PredictionVector<F>)> = None;
            for (pos, &d) in remaining.iter().enumerate() {
                let mut candidate = values.clone();
                candidate[d] = nun.dim(d).to_vec();
                let (candidate, s) = predict(candidate)?;
                let better = match &best {
                    None => true,
                    Some((_, _, b)) => s.score(target) > b.score(target),
                };
                if better {
                    best = Some((pos, candidate, s));
                }
            }
            let (pos, v, s) = best.expect("remaining is non-empty");
            let d = remaining.remove(pos);
            records.push(PerturbationRecord {
                kind: PerturbationKind::Substitution,
                dim: d,
                window: (0, x.len()),
                shapelet_id: None,
                source: PerturbationSource::Nun,
            });
            values = v;
            scores = s;
            valid = scores.argmax() == target;
        }
        phase = match (valid, records.len()) {
            (false, _) => SearchPhase::Exhausted,
            (true, 1) => SearchPhase::SingleDimension,
            (true, _) => SearchPhase::DimensionSubset,
        };
    }
    Ok(Counterfactual {
        base_id: x.id,
        original_class: original.clone(),
        target_class: target.clone(),
        values,
        perturbations: records,
        valid,
        phase,
        model_scores: scores,
        model_calls: calls,
    })
}
