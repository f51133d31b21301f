use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::schema::CauseEffectModel;
use super::ModelError;
use crate::bn::{validate_network, Cpd, Cpt, Network, NoisyOrCpd, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileParameters {
    /// P(true) used for every learnable row before training.
    pub initial_true_probability: f64,
    pub category_gate: String,
}

impl Default for CompileParameters {
    fn default() -> Self {
        Self {
            initial_true_probability: 0.5,
            category_gate: "deterministic-or".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledModel {
    pub model: CauseEffectModel,
    pub network: Network,
    pub node_map: BTreeMap<String, String>,
    pub parameters: CompileParameters,
    pub warnings: Vec<String>,
}

impl CompiledModel {
    /// Variable id for a model id.
    pub fn node(&self, model_id: &str) -> Result<&str, ModelError> {
        self.node_map
            .get(model_id)
            .map(String::as_str)
            .ok_or_else(|| ModelError::UnknownId(model_id.to_string()))
    }

    /// Checks that `trained` has the compiled variables and edges.
    pub fn check_structure(&self, trained: &Network) -> Result<(), ModelError> {
        if trained.variables.len() != self.network.variables.len() {
            return Err(ModelError::StructureMismatch(format!(
                "expected {} variables, found {}",
                self.network.variables.len(),
                trained.variables.len()
            )));
        }
        for cpd in &self.network.cpds {
            let other = trained
                .cpd(cpd.child())
                .ok_or_else(|| ModelError::StructureMismatch(format!("missing {}", cpd.child())))?;
            if other.parents() != cpd.parents() {
                return Err(ModelError::StructureMismatch(format!(
                    "parents of {} differ",
                    cpd.child()
                )));
            }
        }
        Ok(())
    }
}

fn binary_row(p: f64) -> Vec<f64> {
    vec![1.0 - p, p]
}

/// Builds the layered network: causes, cause categories, problems,
/// effect categories, effects.
pub fn compile(model: &CauseEffectModel) -> Result<CompiledModel, ModelError> {
    model.validate()?;
    let parameters = CompileParameters::default();
    let p0 = parameters.initial_true_probability;
    let mut variables = Vec::new();
    let mut cpds: Vec<Cpd> = Vec::new();

    for cause in &model.causes {
        variables.push(Variable::binary(&cause.id, &cause.label));
        cpds.push(Cpt::prior(&cause.id, binary_row(p0)).into());
    }
    for cat in &model.cause_categories {
        variables.push(Variable::binary(&cat.id, &cat.label));
        if cat.members.is_empty() {
            cpds.push(Cpt::prior(&cat.id, binary_row(p0)).into());
        } else {
            cpds.push(NoisyOrCpd::deterministic_or(&cat.id, cat.members.clone()).into());
        }
    }
    let cause_cats: Vec<&str> = model
        .cause_categories
        .iter()
        .map(|c| c.id.as_str())
        .collect();
    for problem in &model.problems {
        variables.push(Variable::binary(&problem.id, &problem.label));
        let rows = vec![binary_row(p0); 1 << cause_cats.len()];
        cpds.push(Cpt::new(&problem.id, &cause_cats, rows).into());
    }
    let problems: Vec<&str> = model.problems.iter().map(|p| p.id.as_str()).collect();
    for cat in &model.effect_categories {
        variables.push(Variable::binary(&cat.id, &cat.label));
        let rows = vec![binary_row(p0); 1 << problems.len()];
        cpds.push(Cpt::new(&cat.id, &problems, rows).into());
    }
    for cat in &model.effect_categories {
        for member in &cat.members {
            let label = model.label(member).unwrap_or(member);
            variables.push(Variable::binary(member, label));
            cpds.push(Cpt::new(member, &[cat.id.as_str()], vec![binary_row(p0); 2]).into());
        }
    }

    let node_map = variables
        .iter()
        .map(|v| (v.id.clone(), v.id.clone()))
        .collect();
    let network = Network::new(format!("dca-model-{}", model.version), variables, cpds);
    let report = validate_network(&network);
    if !report.is_valid() {
        return Err(ModelError::StructureMismatch(format!(
            "compiled network is invalid: {report:?}"
        )));
    }
    Ok(CompiledModel {
        model: model.clone(),
        network,
        node_map,
        parameters,
        warnings: model.warnings(),
    })
}
