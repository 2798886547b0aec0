//! The grounding network: a frozen per-language embedding lookup, one shared
//! trainable linear alignment into the grounded space, one LSTM encoder per
//! language, and the summed per-language MSE loss against the image vector.
//! After training, the alignment alone maps any word vector into the
//! grounded space.

pub mod checkpoint;

use crate::data::{Batch, EmbeddingTable, LanguageTag, Space, TokenBatch, Vocabulary};
use crate::error::{Error, Result};
use crate::numcore::{Matrix, NodeId, Tape};
use crate::seeding;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    /// d: width of the pre-trained textual vectors.
    pub textual: usize,
    /// c: width of the grounded space.
    pub grounded: usize,
    /// h: LSTM hidden width; must equal the image-vector width.
    pub hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            textual: 300,
            grounded: 1024,
            hidden: 2048,
        }
    }
}

/// The shared d x c linear map into the grounded space. No bias: extraction
/// is exactly the matrix product.
#[derive(Clone, Debug)]
pub struct AlignmentLayer {
    matrix: Matrix,
}

impl AlignmentLayer {
    pub fn new(matrix: Matrix) -> Self {
        Self { matrix }
    }

    pub fn init(textual: usize, grounded: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            matrix: Matrix::glorot_uniform(textual, grounded, &mut rng),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Map a stack of word vectors (n x d) into the grounded space (n x c).
    pub fn ground(&self, words: &Matrix) -> Result<Matrix> {
        words.matmul(&self.matrix)
    }

    /// Ground every word of a table, words never seen in training included.
    pub fn extract(&self, table: &EmbeddingTable) -> Result<EmbeddingTable> {
        let grounded = self.ground(table.vectors())?;
        EmbeddingTable::from_parts(
            table.language().clone(),
            Space::Grounded,
            table.words().to_vec(),
            grounded,
        )
    }
}

/// Single-layer unidirectional LSTM: sigmoid input/forget/output gates,
/// tanh candidate and cell activation, zero initial states. The hidden
/// state at the last valid position is the sentence vector.
#[derive(Clone, Debug)]
pub struct LstmEncoder {
    language: LanguageTag,
    pub w_input: Matrix,
    pub w_forget: Matrix,
    pub w_output: Matrix,
    pub w_cell: Matrix,
    pub u_input: Matrix,
    pub u_forget: Matrix,
    pub u_output: Matrix,
    pub u_cell: Matrix,
    pub b_input: Matrix,
    pub b_forget: Matrix,
    pub b_output: Matrix,
    pub b_cell: Matrix,
}

/// Field order used everywhere an encoder's parameters are enumerated.
const ENCODER_FIELDS: [&str; 12] = [
    "w_input", "w_forget", "w_output", "w_cell", "u_input", "u_forget", "u_output", "u_cell",
    "b_input", "b_forget", "b_output", "b_cell",
];

impl LstmEncoder {
    /// Glorot input weights, orthogonal recurrent weights, forget-gate bias
    /// 1.0 and other biases zero.
    pub fn init(language: LanguageTag, input: usize, hidden: usize, seed: u64) -> Self {
        let w = |label: &str| {
            let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive(seed, label));
            Matrix::glorot_uniform(input, hidden, &mut rng)
        };
        let (w_input, w_forget, w_output, w_cell) = (w("w_i"), w("w_f"), w("w_o"), w("w_c"));
        let u = |label: &str| {
            let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive(seed, label));
            Matrix::orthogonal(hidden, &mut rng)
        };
        let (u_input, u_forget, u_output, u_cell) = (u("u_i"), u("u_f"), u("u_o"), u("u_c"));
        Self {
            language,
            w_input,
            w_forget,
            w_output,
            w_cell,
            u_input,
            u_forget,
            u_output,
            u_cell,
            b_input: Matrix::zeros(1, hidden),
            b_forget: Matrix::from_fn(1, hidden, |_, _| 1.0),
            b_output: Matrix::zeros(1, hidden),
            b_cell: Matrix::zeros(1, hidden),
        }
    }

    pub fn language(&self) -> &LanguageTag {
        &self.language
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_input.cols()
    }

    fn fields(&self) -> [&Matrix; 12] {
        [
            &self.w_input,
            &self.w_forget,
            &self.w_output,
            &self.w_cell,
            &self.u_input,
            &self.u_forget,
            &self.u_output,
            &self.u_cell,
            &self.b_input,
            &self.b_forget,
            &self.b_output,
            &self.b_cell,
        ]
    }

    fn fields_mut(&mut self) -> [&mut Matrix; 12] {
        [
            &mut self.w_input,
            &mut self.w_forget,
            &mut self.w_output,
            &mut self.w_cell,
            &mut self.u_input,
            &mut self.u_forget,
            &mut self.u_output,
            &mut self.u_cell,
            &mut self.b_input,
            &mut self.b_forget,
            &mut self.b_output,
            &mut self.b_cell,
        ]
    }

    /// Encode one already-grounded sequence (T x c) into its sentence
    /// vector (1 x h). Runs the same recurrence as training, on a throwaway
    /// tape with untracked parameters.
    pub fn encode(&self, grounded: &Matrix, mask: &[bool]) -> Result<Matrix> {
        if grounded.rows() != mask.len() {
            return Err(Error::shape("encode", grounded.shape(), (mask.len(), 1)));
        }
        if grounded.cols() != self.input_dim() {
            return Err(Error::shape(
                "encode",
                grounded.shape(),
                (self.input_dim(), self.hidden_dim()),
            ));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::Contract(
                "cannot encode an all-masked sequence".into(),
            ));
        }
        let mut tape = Tape::new();
        let nodes = bind_encoder(&mut tape, self, false);
        let steps: Vec<NodeId> = (0..grounded.rows())
            .map(|t| tape.constant(Matrix::row_vector(grounded.row(t))))
            .collect();
        let masks: Vec<Vec<bool>> = mask.iter().map(|&m| vec![m]).collect();
        let h = lstm_forward(&mut tape, &nodes, &steps, &masks, 1, self.hidden_dim())?;
        Ok(tape.value(h).clone())
    }
}

/// Tape handles for one encoder's parameters.
#[derive(Clone, Copy)]
pub struct EncoderNodes {
    pub w_input: NodeId,
    pub w_forget: NodeId,
    pub w_output: NodeId,
    pub w_cell: NodeId,
    pub u_input: NodeId,
    pub u_forget: NodeId,
    pub u_output: NodeId,
    pub u_cell: NodeId,
    pub b_input: NodeId,
    pub b_forget: NodeId,
    pub b_output: NodeId,
    pub b_cell: NodeId,
}

fn bind_encoder(tape: &mut Tape, enc: &LstmEncoder, trainable: bool) -> EncoderNodes {
    let mut bind = |m: &Matrix| {
        if trainable {
            tape.parameter(m.clone())
        } else {
            tape.constant(m.clone())
        }
    };
    EncoderNodes {
        w_input: bind(&enc.w_input),
        w_forget: bind(&enc.w_forget),
        w_output: bind(&enc.w_output),
        w_cell: bind(&enc.w_cell),
        u_input: bind(&enc.u_input),
        u_forget: bind(&enc.u_forget),
        u_output: bind(&enc.u_output),
        u_cell: bind(&enc.u_cell),
        b_input: bind(&enc.b_input),
        b_forget: bind(&enc.b_forget),
        b_output: bind(&enc.b_output),
        b_cell: bind(&enc.b_cell),
    }
}

/// Run the LSTM recurrence over `steps` (each n x c, already grounded).
/// `masks[t][r]` marks row r valid at step t; masked positions carry the
/// previous cell and hidden state through, so the result row equals the
/// hidden state at that row's last valid position.
fn lstm_forward(
    tape: &mut Tape,
    enc: &EncoderNodes,
    steps: &[NodeId],
    masks: &[Vec<bool>],
    n: usize,
    hidden: usize,
) -> Result<NodeId> {
    debug_assert_eq!(steps.len(), masks.len());
    let mut cell = tape.constant(Matrix::zeros(n, hidden));
    let mut state = tape.constant(Matrix::zeros(n, hidden));
    for (x, mask) in steps.iter().zip(masks) {
        let gate = |tape: &mut Tape, w, u, b| -> Result<NodeId> {
            let xw = tape.matmul(*x, w)?;
            let hu = tape.matmul(state, u)?;
            let pre = tape.add(xw, hu)?;
            tape.add_bias(pre, b)
        };
        let pre_i = gate(tape, enc.w_input, enc.u_input, enc.b_input)?;
        let pre_f = gate(tape, enc.w_forget, enc.u_forget, enc.b_forget)?;
        let pre_o = gate(tape, enc.w_output, enc.u_output, enc.b_output)?;
        let pre_c = gate(tape, enc.w_cell, enc.u_cell, enc.b_cell)?;
        let i_gate = tape.sigmoid(pre_i);
        let f_gate = tape.sigmoid(pre_f);
        let o_gate = tape.sigmoid(pre_o);
        let candidate = tape.tanh(pre_c);

        let keep = tape.mul(f_gate, cell)?;
        let write = tape.mul(i_gate, candidate)?;
        let cell_new = tape.add(keep, write)?;
        let cell_act = tape.tanh(cell_new);
        let state_new = tape.mul(o_gate, cell_act)?;

        let valid = tape.constant(Matrix::from_fn(n, hidden, |r, _| {
            if mask[r] {
                1.0
            } else {
                0.0
            }
        }));
        let invalid = tape.constant(Matrix::from_fn(n, hidden, |r, _| {
            if mask[r] {
                0.0
            } else {
                1.0
            }
        }));
        let c_keep = tape.mul(invalid, cell)?;
        let c_take = tape.mul(valid, cell_new)?;
        cell = tape.add(c_keep, c_take)?;
        let h_keep = tape.mul(invalid, state)?;
        let h_take = tape.mul(valid, state_new)?;
        state = tape.add(h_keep, h_take)?;
    }
    Ok(state)
}

/// Alignment plus per-language encoders: everything training updates and
/// checkpoints persist.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub alignment: AlignmentLayer,
    pub encoders: BTreeMap<LanguageTag, LstmEncoder>,
}

impl ModelParams {
    pub fn init(dims: ModelDims, languages: &[LanguageTag], seed: u64) -> Self {
        let alignment = AlignmentLayer::init(dims.textual, dims.grounded, seeding::derive(seed, "alignment"));
        let mut encoders = BTreeMap::new();
        for lang in languages {
            let enc_seed = seeding::derive(seed, &format!("encoder.{lang}"));
            encoders.insert(
                lang.clone(),
                LstmEncoder::init(lang.clone(), dims.grounded, dims.hidden, enc_seed),
            );
        }
        Self {
            dims,
            alignment,
            encoders,
        }
    }

    pub fn languages(&self) -> Vec<LanguageTag> {
        self.encoders.keys().cloned().collect()
    }

    /// Every trainable tensor with its stable name, in a fixed order:
    /// the alignment first, then each language's encoder fields.
    pub fn named_params(&self) -> Vec<(String, &Matrix)> {
        let mut out: Vec<(String, &Matrix)> = vec![("alignment".into(), &self.alignment.matrix)];
        for (lang, enc) in &self.encoders {
            for (name, m) in ENCODER_FIELDS.iter().zip(enc.fields()) {
                out.push((format!("{lang}.{name}"), m));
            }
        }
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out: Vec<(String, &mut Matrix)> =
            vec![("alignment".into(), &mut self.alignment.matrix)];
        for (lang, enc) in &mut self.encoders {
            for (name, m) in ENCODER_FIELDS.iter().zip(enc.fields_mut()) {
                out.push((format!("{lang}.{name}"), m));
            }
        }
        out
    }

    pub fn param_shapes(&self) -> Vec<(usize, usize)> {
        self.named_params().iter().map(|(_, m)| m.shape()).collect()
    }
}

/// Tape handles for every trainable tensor of one forward pass.
pub struct TapeBindings {
    pub alignment: NodeId,
    pub encoders: BTreeMap<LanguageTag, EncoderNodes>,
    /// (name, node) in `named_params` order.
    pub ordered: Vec<(String, NodeId)>,
}

/// Per-batch loss nodes.
pub struct BatchLoss {
    pub total: NodeId,
    pub per_language: Vec<(LanguageTag, NodeId)>,
}

/// Scalar loss values read off a tape.
#[derive(Clone, Debug)]
pub struct LossValues {
    pub total: f64,
    pub per_language: Vec<(LanguageTag, f64)>,
}

/// The full model: trainable parameters plus the frozen per-language
/// embedding tables and the vocab-id -> table-row lookup for each language.
pub struct GroundingModel {
    params: ModelParams,
    tables: BTreeMap<LanguageTag, EmbeddingTable>,
    lookups: BTreeMap<LanguageTag, Vec<usize>>,
}

impl GroundingModel {
    /// Assemble a model with freshly initialized parameters.
    pub fn new(
        tables: BTreeMap<LanguageTag, EmbeddingTable>,
        vocabularies: &BTreeMap<LanguageTag, Vocabulary>,
        dims: ModelDims,
        seed: u64,
    ) -> Result<Self> {
        let languages: Vec<LanguageTag> = tables.keys().cloned().collect();
        let params = ModelParams::init(dims, &languages, seed);
        Self::assemble(params, tables, vocabularies)
    }

    /// Assemble a model around existing parameters (e.g. from a checkpoint).
    pub fn assemble(
        params: ModelParams,
        tables: BTreeMap<LanguageTag, EmbeddingTable>,
        vocabularies: &BTreeMap<LanguageTag, Vocabulary>,
    ) -> Result<Self> {
        let dims = params.dims;
        let mut lookups = BTreeMap::new();
        for (lang, table) in &tables {
            if table.dim() != dims.textual {
                return Err(Error::shape(
                    "model_tables",
                    (table.len(), table.dim()),
                    (table.len(), dims.textual),
                ));
            }
            if !params.encoders.contains_key(lang) {
                return Err(Error::Contract(format!(
                    "parameters carry no encoder for language '{lang}'"
                )));
            }
            let vocab = vocabularies.get(lang).ok_or_else(|| {
                Error::Contract(format!("no vocabulary for language '{lang}'"))
            })?;
            let mut lookup = Vec::with_capacity(vocab.len());
            for word in vocab.words() {
                let row = table.word_id(word).ok_or_else(|| {
                    Error::Contract(format!(
                        "vocabulary word '{word}' missing from the '{lang}' embedding table"
                    ))
                })?;
                lookup.push(row);
            }
            lookups.insert(lang.clone(), lookup);
        }
        for lang in params.encoders.keys() {
            if !tables.contains_key(lang) {
                return Err(Error::Contract(format!(
                    "no embedding table for model language '{lang}'"
                )));
            }
        }
        Ok(Self {
            params,
            tables,
            lookups,
        })
    }

    pub fn dims(&self) -> ModelDims {
        self.params.dims
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    pub fn set_params(&mut self, params: ModelParams) {
        self.params = params;
    }

    pub fn languages(&self) -> Vec<LanguageTag> {
        self.params.languages()
    }

    pub fn table(&self, lang: &LanguageTag) -> Option<&EmbeddingTable> {
        self.tables.get(lang)
    }

    /// Register every trainable tensor on a tape.
    pub fn bind_params(&self, tape: &mut Tape) -> TapeBindings {
        let alignment = tape.parameter(self.params.alignment.matrix.clone());
        let mut encoders = BTreeMap::new();
        let mut ordered: Vec<(String, NodeId)> = vec![("alignment".into(), alignment)];
        for (lang, enc) in &self.params.encoders {
            let nodes = bind_encoder(tape, enc, true);
            let ids = [
                nodes.w_input,
                nodes.w_forget,
                nodes.w_output,
                nodes.w_cell,
                nodes.u_input,
                nodes.u_forget,
                nodes.u_output,
                nodes.u_cell,
                nodes.b_input,
                nodes.b_forget,
                nodes.b_output,
                nodes.b_cell,
            ];
            for (name, id) in ENCODER_FIELDS.iter().zip(ids) {
                ordered.push((format!("{lang}.{name}"), id));
            }
            encoders.insert(lang.clone(), nodes);
        }
        TapeBindings {
            alignment,
            encoders,
            ordered,
        }
    }

    /// Token vectors for step `t` of a batch, gathered from the frozen
    /// table (n x d). Masked positions gather row 0; the mask blanks them.
    fn gather_step(&self, lang: &LanguageTag, tokens: &TokenBatch, t: usize) -> Matrix {
        let table = &self.tables[lang];
        let lookup = &self.lookups[lang];
        Matrix::from_fn(tokens.size, self.params.dims.textual, |r, c| {
            let row = lookup[tokens.id(r, t)];
            table.row(row)[c]
        })
    }

    /// Build the joint loss for a batch on a tape: the sum over languages of
    /// the per-language MSE between sentence vectors and image vectors.
    pub fn joint_loss(
        &self,
        tape: &mut Tape,
        bindings: &TapeBindings,
        batch: &Batch,
    ) -> Result<BatchLoss> {
        let dims = self.params.dims;
        if batch.image_vectors.cols() != dims.hidden {
            return Err(Error::shape(
                "joint_loss",
                batch.image_vectors.shape(),
                (batch.size, dims.hidden),
            ));
        }
        let image = tape.constant(batch.image_vectors.clone());

        let mut per_language = Vec::new();
        let mut total: Option<NodeId> = None;
        for (lang, enc_nodes) in &bindings.encoders {
            let tokens = batch.tokens.get(lang).ok_or_else(|| {
                Error::Contract(format!("batch is missing language '{lang}'"))
            })?;
            for r in 0..tokens.size {
                if !(0..tokens.t_max).any(|t| tokens.valid(r, t)) {
                    return Err(Error::Contract(format!(
                        "batch row {r} has an all-masked '{lang}' caption"
                    )));
                }
            }
            let mut steps = Vec::with_capacity(tokens.t_max);
            let mut masks = Vec::with_capacity(tokens.t_max);
            for t in 0..tokens.t_max {
                let words = tape.constant(self.gather_step(lang, tokens, t));
                let grounded = tape.matmul(words, bindings.alignment)?;
                steps.push(grounded);
                masks.push((0..tokens.size).map(|r| tokens.valid(r, t)).collect());
            }
            let sentence = lstm_forward(tape, enc_nodes, &steps, &masks, tokens.size, dims.hidden)?;
            let loss = tape.mse_loss(sentence, image)?;
            per_language.push((lang.clone(), loss));
            total = Some(match total {
                None => loss,
                Some(acc) => tape.add(acc, loss)?,
            });
        }
        let total = total.ok_or_else(|| Error::Contract("model has no languages".into()))?;
        Ok(BatchLoss {
            total,
            per_language,
        })
    }

    /// Forward-only convenience: loss values for one batch.
    pub fn loss_values(&self, batch: &Batch) -> Result<LossValues> {
        let mut tape = Tape::new();
        let bindings = self.bind_params(&mut tape);
        let loss = self.joint_loss(&mut tape, &bindings, batch)?;
        Ok(read_loss_values(&tape, &loss))
    }

    /// Ground the full embedding table of one language.
    pub fn extract_grounded(&self, lang: &LanguageTag) -> Result<EmbeddingTable> {
        let table = self.tables.get(lang).ok_or_else(|| {
            Error::Contract(format!("no embedding table for language '{lang}'"))
        })?;
        self.params.alignment.extract(table)
    }
}

pub fn read_loss_values(tape: &Tape, loss: &BatchLoss) -> LossValues {
    LossValues {
        total: tape.value(loss.total).get(0, 0),
        per_language: loss
            .per_language
            .iter()
            .map(|(lang, id)| (lang.clone(), tape.value(*id).get(0, 0)))
            .collect(),
    }
}
