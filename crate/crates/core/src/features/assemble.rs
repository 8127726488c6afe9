use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::EmbeddingTable;
use crate::error::{Error, Result};
use crate::ids::DrugId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct BlockDims {
    pub embedding: usize,
    pub protein: usize,
    pub mono: usize,
}

impl BlockDims {
    pub fn width(&self) -> usize {
        self.embedding + self.protein + self.mono
    }
}

/// One dense feature row per drug: `[embedding ‖ protein ‖ mono]`.
#[derive(Debug, Clone)]
pub struct DrugFeatureMatrix {
    drug_order: Vec<DrugId>,
    block_dims: BlockDims,
    values: DMatrix<f64>,
    row_of: HashMap<DrugId, usize>,
}

impl PartialEq for DrugFeatureMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.drug_order == other.drug_order && self.block_dims == other.block_dims && self.values == other.values
    }
}

impl DrugFeatureMatrix {
    pub fn new(drug_order: Vec<DrugId>, block_dims: BlockDims, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != drug_order.len() {
            return Err(Error::Dimension {
                expected: drug_order.len(),
                actual: values.nrows(),
                context: "feature matrix rows",
            });
        }
        if values.ncols() != block_dims.width() {
            return Err(Error::Dimension {
                expected: block_dims.width(),
                actual: values.ncols(),
                context: "feature matrix width",
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("feature matrix contains non-finite values".into()));
        }
        let mut row_of = HashMap::with_capacity(drug_order.len());
        for (i, d) in drug_order.iter().enumerate() {
            if row_of.insert(d.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("drug `{d}` appears twice in drug order")));
            }
        }
        Ok(DrugFeatureMatrix {
            drug_order,
            block_dims,
            values,
            row_of,
        })
    }

    pub fn drug_order(&self) -> &[DrugId] {
        &self.drug_order
    }

    pub fn block_dims(&self) -> BlockDims {
        self.block_dims
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn contains(&self, drug: &DrugId) -> bool {
        self.row_of.contains_key(drug)
    }

    fn row_index(&self, drug: &DrugId) -> Result<usize> {
        self.row_of
            .get(drug)
            .copied()
            .ok_or_else(|| Error::UnknownDrug(drug.to_string()))
    }

    pub fn row(&self, drug: &DrugId) -> Result<DVector<f64>> {
        Ok(self.values.row(self.row_index(drug)?).transpose())
    }

    /// Element-wise sum of the two drugs' rows.
    pub fn pair_vector(&self, a: &DrugId, b: &DrugId) -> Result<DVector<f64>> {
        if a == b {
            return Err(Error::InvalidPair(a.to_string()));
        }
        let (i, j) = (self.row_index(a)?, self.row_index(b)?);
        Ok((self.values.row(i) + self.values.row(j)).transpose())
    }

    /// Stacks [`pair_vector`](Self::pair_vector) for every pair into a batch.
    pub fn pair_matrix<'a, I>(&self, pairs: I) -> Result<DMatrix<f64>>
    where
        I: IntoIterator<Item = (&'a DrugId, &'a DrugId)>,
    {
        let mut index = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::InvalidPair(a.to_string()));
            }
            index.push((self.row_index(a)?, self.row_index(b)?));
        }
        Ok(DMatrix::from_fn(index.len(), self.width(), |r, c| {
            let (i, j) = index[r];
            self.values[(i, c)] + self.values[(j, c)]
        }))
    }

    /// Column range `[start, end)` of each block.
    pub fn block_ranges(&self) -> [(usize, usize); 3] {
        let e = self.block_dims.embedding;
        let p = e + self.block_dims.protein;
        [(0, e), (e, p), (p, p + self.block_dims.mono)]
    }
}

pub fn assemble_drug_features(
    embeddings: Option<&EmbeddingTable>,
    protein_pca: &DMatrix<f64>,
    mono_pca: &DMatrix<f64>,
    drug_order: &[DrugId],
) -> Result<DrugFeatureMatrix> {
    let n = drug_order.len();
    for (block, context) in [(protein_pca, "protein block rows"), (mono_pca, "mono block rows")] {
        if block.nrows() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: block.nrows(),
                context,
            });
        }
    }
    if let Some(table) = embeddings {
        let missing: Vec<String> = drug_order
            .iter()
            .filter(|d| !table.rows.contains_key(*d))
            .map(|d| d.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingEmbeddings(missing));
        }
    }
    let dims = BlockDims {
        embedding: embeddings.map_or(0, |t| t.dim),
        protein: protein_pca.ncols(),
        mono: mono_pca.ncols(),
    };
    let mut values = DMatrix::zeros(n, dims.width());
    for (i, drug) in drug_order.iter().enumerate() {
        if let Some(table) = embeddings {
            for (j, v) in table.rows[drug].iter().enumerate() {
                values[(i, j)] = *v;
            }
        }
        for j in 0..dims.protein {
            values[(i, dims.embedding + j)] = protein_pca[(i, j)];
        }
        for j in 0..dims.mono {
            values[(i, dims.embedding + dims.protein + j)] = mono_pca[(i, j)];
        }
    }
    DrugFeatureMatrix::new(drug_order.to_vec(), dims, values)
}
