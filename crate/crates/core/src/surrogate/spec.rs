use serde::{Deserialize, Serialize};

use super::SurrogateError;

/// Hidden-layer widths of a feedforward regressor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub hidden_widths: Vec<usize>,
    /// Row of the reference architecture table (1-based) this spec came from.
    pub table_index: Option<usize>,
}

const TABLE1: [&[usize]; 10] = [
    &[20, 10],
    &[50, 20, 10],
    &[100, 50, 20, 10],
    &[500, 100, 50, 20, 10],
    &[500, 100, 20, 10],
    &[1000, 100, 50, 20, 10],
    &[1000, 100, 10],
    &[400, 300, 200, 100, 50, 20, 10],
    &[1000, 300, 200, 100, 50, 20, 10],
    &[5000, 1000, 500, 400, 300, 200, 100, 50, 20, 10],
];

impl NetworkSpec {
    pub fn custom(hidden_widths: Vec<usize>) -> Result<Self, SurrogateError> {
        let spec = Self {
            hidden_widths,
            table_index: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SurrogateError> {
        if self.hidden_widths.is_empty() {
            return Err(SurrogateError::InvalidSpec("no hidden layers".into()));
        }
        if let Some(pos) = self.hidden_widths.iter().position(|&w| w == 0) {
            return Err(SurrogateError::InvalidSpec(format!(
                "hidden layer {} has width 0",
                pos + 1
            )));
        }
        Ok(())
    }

    pub fn total_nodes(&self) -> usize {
        self.hidden_widths.iter().sum()
    }

    pub fn depth(&self) -> usize {
        self.hidden_widths.len()
    }

    /// Short label such as `spec3` or `custom-20x10`.
    pub fn label(&self) -> String {
        match self.table_index {
            Some(i) => format!("spec{i}"),
            None => {
                let widths: Vec<String> = self.hidden_widths.iter().map(|w| w.to_string()).collect();
                format!("custom-{}", widths.join("x"))
            }
        }
    }
}

/// The ten reference architectures, in table order (index 0 is row 1).
pub fn table1_specs() -> Vec<NetworkSpec> {
    TABLE1
        .iter()
        .enumerate()
        .map(|(i, widths)| NetworkSpec {
            hidden_widths: widths.to_vec(),
            table_index: Some(i + 1),
        })
        .collect()
}

/// Row `index` (1-based) of the reference table.
pub fn table1_spec(index: usize) -> Result<NetworkSpec, SurrogateError> {
    if !(1..=TABLE1.len()).contains(&index) {
        return Err(SurrogateError::InvalidSpec(format!(
            "table index {index} outside 1..=10"
        )));
    }
    Ok(table1_specs().swap_remove(index - 1))
}
