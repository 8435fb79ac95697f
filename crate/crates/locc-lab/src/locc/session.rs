use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{
    shannon_entropy, Complex64, PureState, QcoreError, Unitary, ALGEBRAIC_TOL, DEFAULT_DIM_CAP,
    PROB_FLOOR,
};

pub type RegisterId = u32;
pub type LoccResult<T> = Result<T, LoccError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub id: RegisterId,
    pub name: String,
    pub dim: usize,
    pub owner: Party,
}

/// One transcript entry. Serialized field names are a fixed interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Event {
    Unitary {
        party: Party,
        registers: Vec<RegisterId>,
    },
    Measure {
        party: Party,
        registers: Vec<RegisterId>,
        outcome: usize,
    },
    Message {
        party: Party,
        registers: Vec<RegisterId>,
        value: usize,
        domain: usize,
        bits: f64,
    },
    Ancilla {
        party: Party,
        registers: Vec<RegisterId>,
        value: usize,
    },
    Discard {
        party: Party,
        registers: Vec<RegisterId>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostSummary {
    pub bits_a_to_b: f64,
    pub bits_a_to_b_ceiling: u64,
    pub bits_b_to_a: f64,
    pub bits_b_to_a_ceiling: u64,
    pub ebits_consumed: f64,
    pub transcript_len: usize,
}

#[derive(Debug, Error)]
pub enum LoccError {
    #[error("no register with id {id}")]
    UnknownRegister { id: RegisterId },
    #[error("{party:?} cannot act on register {id} owned by {owner:?}")]
    LocalityViolation {
        party: Party,
        id: RegisterId,
        owner: Party,
    },
    #[error("message endpoints must differ")]
    MessageLoop,
    #[error("message domain must be at least 2, got {domain}")]
    MessageDomain { domain: usize },
    #[error("message value {value} outside domain {domain}")]
    MessageValue { value: usize, domain: usize },
    #[error("registers {ids:?} are entangled with the remainder (purity {purity})")]
    NotProduct { ids: Vec<RegisterId>, purity: f64 },
    #[error("squared Schmidt coefficients must be nonnegative and sum to 1, got sum {sum}")]
    BadSchmidtCoefficients { sum: f64 },
    #[error("{count} Schmidt coefficients exceed min dimension {min_dim}")]
    SchmidtRank { count: usize, min_dim: usize },
    #[error("register dimension must be at least 2, got {dim}")]
    RegisterDim { dim: usize },
    #[error("basis value {value} outside dimension {dim}")]
    BasisValue { value: usize, dim: usize },
    #[error("part dimensions multiply to {product}, register has dimension {dim}")]
    SplitMismatch { dim: usize, product: usize },
    #[error("scripted outcome {outcome} is impossible at this measurement")]
    ImpossibleOutcome { outcome: usize },
    #[error("exhaustive evaluation exceeded the cap of {cap} paths")]
    BranchExplosion { cap: usize },
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}

/// How measurements resolve their outcomes.
#[derive(Debug, Clone)]
pub(crate) enum MeasurePolicy {
    /// Draw from the session RNG.
    Sample,
    /// Consume forced outcomes; past the end, take the smallest live outcome
    /// and record every alternative as a path to explore.
    Script { forced: Vec<usize>, cursor: usize },
}

/// Two-party protocol runtime.
///
/// Holds the joint state of all live registers (in register order), the
/// event transcript, and the classical/entanglement cost ledgers. Quantum
/// operations go through the locality check; resource provisioning
/// (entangled pairs, protocol inputs) bypasses the transcript but is
/// metered where it consumes entanglement.
pub struct LoccSession {
    registers: Vec<Register>,
    state: PureState,
    transcript: Vec<Event>,
    bits_a_to_b: f64,
    bits_a_to_b_ceiling: u64,
    bits_b_to_a: f64,
    bits_b_to_a_ceiling: u64,
    ebits_consumed: f64,
    seed: u64,
    rng: ChaCha8Rng,
    next_id: RegisterId,
    dim_cap: usize,
    policy: MeasurePolicy,
    path: Vec<usize>,
    path_probs: Vec<f64>,
    spawned: Vec<Vec<usize>>,
}

impl LoccSession {
    pub fn new(seed: u64) -> Self {
        Self::with_dim_cap(seed, DEFAULT_DIM_CAP)
    }

    pub fn with_dim_cap(seed: u64, dim_cap: usize) -> Self {
        LoccSession {
            registers: Vec::new(),
            state: PureState::scalar(),
            transcript: Vec::new(),
            bits_a_to_b: 0.0,
            bits_a_to_b_ceiling: 0,
            bits_b_to_a: 0.0,
            bits_b_to_a_ceiling: 0,
            ebits_consumed: 0.0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_id: 0,
            dim_cap,
            policy: MeasurePolicy::Sample,
            path: Vec::new(),
            path_probs: Vec::new(),
            spawned: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn transcript(&self) -> &[Event] {
        &self.transcript
    }

    pub fn transcript_json(&self) -> String {
        serde_json::to_string(&self.transcript).expect("events serialize")
    }

    /// Outcomes taken so far, one per measurement, with their Born
    /// probabilities.
    pub fn outcome_path(&self) -> (&[usize], &[f64]) {
        (&self.path, &self.path_probs)
    }

    pub fn path_weight(&self) -> f64 {
        self.path_probs.iter().product()
    }

    pub(crate) fn set_policy(&mut self, policy: MeasurePolicy) {
        self.policy = policy;
    }

    pub(crate) fn take_spawned(&mut self) -> Vec<Vec<usize>> {
        std::mem::take(&mut self.spawned)
    }

    fn alloc(&mut self, name: String, dim: usize, owner: Party) -> RegisterId {
        let id = self.next_id;
        self.next_id += 1;
        self.registers.push(Register {
            id,
            name,
            dim,
            owner,
        });
        id
    }

    fn position(&self, id: RegisterId) -> LoccResult<usize> {
        self.registers
            .iter()
            .position(|r| r.id == id)
            .ok_or(LoccError::UnknownRegister { id })
    }

    fn positions(&self, ids: &[RegisterId]) -> LoccResult<Vec<usize>> {
        let positions: Vec<usize> = ids
            .iter()
            .map(|&id| self.position(id))
            .collect::<LoccResult<_>>()?;
        for (k, &p) in positions.iter().enumerate() {
            if positions[..k].contains(&p) {
                return Err(QcoreError::DuplicateSubsystem { index: p }.into());
            }
        }
        Ok(positions)
    }

    fn owned_positions(&self, party: Party, ids: &[RegisterId]) -> LoccResult<Vec<usize>> {
        let positions = self.positions(ids)?;
        for &p in &positions {
            let reg = &self.registers[p];
            if reg.owner != party {
                return Err(LoccError::LocalityViolation {
                    party,
                    id: reg.id,
                    owner: reg.owner,
                });
            }
        }
        Ok(positions)
    }

    /// Appends a shared pair Σ √λ_l |ll⟩ and charges its entropy of
    /// entanglement to the ebit ledger. Not a transcript event: resource
    /// provisioning stands in for prior distribution of entanglement.
    pub fn add_entangled_pair(
        &mut self,
        sq_coeffs: &[f64],
        dim_a: usize,
        dim_b: usize,
    ) -> LoccResult<(RegisterId, RegisterId)> {
        if dim_a < 2 || dim_b < 2 {
            return Err(LoccError::RegisterDim {
                dim: dim_a.min(dim_b),
            });
        }
        let sum: f64 = sq_coeffs.iter().sum();
        if sq_coeffs.is_empty() || sq_coeffs.iter().any(|&l| l < 0.0) || (sum - 1.0).abs() > ALGEBRAIC_TOL
        {
            return Err(LoccError::BadSchmidtCoefficients { sum });
        }
        if sq_coeffs.len() > dim_a.min(dim_b) {
            return Err(LoccError::SchmidtRank {
                count: sq_coeffs.len(),
                min_dim: dim_a.min(dim_b),
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim_a * dim_b];
        for (l, &lam) in sq_coeffs.iter().enumerate() {
            amps[l * dim_b + l] = Complex64::new(lam.sqrt(), 0.0);
        }
        let pair = PureState::new(vec![dim_a, dim_b], amps)?;
        self.state = self.state.tensor(&pair, self.dim_cap)?;
        let ida = self.alloc(format!("e{}a", self.next_id), dim_a, Party::Alice);
        let idb = self.alloc(format!("e{}b", self.next_id), dim_b, Party::Bob);
        self.ebits_consumed += shannon_entropy(sq_coeffs)?;
        Ok((ida, idb))
    }

    /// Appends a party-local register in basis state `value`. Transcripted.
    pub fn add_ancilla(
        &mut self,
        party: Party,
        dim: usize,
        value: usize,
    ) -> LoccResult<RegisterId> {
        if dim < 2 {
            return Err(LoccError::RegisterDim { dim });
        }
        if value >= dim {
            return Err(LoccError::BasisValue { value, dim });
        }
        let anc = PureState::basis(&[dim], &[value])?;
        self.state = self.state.tensor(&anc, self.dim_cap)?;
        let id = self.alloc(format!("anc{}", self.next_id), dim, party);
        self.transcript.push(Event::Ancilla {
            party,
            registers: vec![id],
            value,
        });
        Ok(id)
    }

    /// Appends a party-local input state, one register per subsystem. Not a
    /// transcript event: protocol inputs are given, not performed.
    pub fn add_local_state(
        &mut self,
        party: Party,
        name: &str,
        input: PureState,
    ) -> LoccResult<Vec<RegisterId>> {
        for &d in input.dims() {
            if d < 2 {
                return Err(LoccError::RegisterDim { dim: d });
            }
        }
        self.state = self.state.tensor(&input, self.dim_cap)?;
        let ids = input
            .dims()
            .iter()
            .enumerate()
            .map(|(k, &d)| self.alloc(format!("{name}{k}"), d, party))
            .collect();
        Ok(ids)
    }

    pub fn local_unitary(
        &mut self,
        party: Party,
        ids: &[RegisterId],
        u: &Unitary,
    ) -> LoccResult<()> {
        let positions = self.owned_positions(party, ids)?;
        self.state = self.state.apply_unitary(u, &positions)?;
        self.transcript.push(Event::Unitary {
            party,
            registers: ids.to_vec(),
        });
        Ok(())
    }

    fn draw_outcome(&mut self, probs: &[f64]) -> LoccResult<(usize, f64)> {
        match &mut self.policy {
            MeasurePolicy::Sample => {
                let u: f64 = self.rng.gen();
                let mut cum = 0.0;
                let mut last_live = 0;
                for (c, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        last_live = c;
                    }
                    cum += p;
                    if p > 0.0 && cum > u {
                        return Ok((c, p));
                    }
                }
                Ok((last_live, probs[last_live]))
            }
            MeasurePolicy::Script { forced, cursor } => {
                if *cursor < forced.len() {
                    let outcome = forced[*cursor];
                    *cursor += 1;
                    if outcome >= probs.len() || probs[outcome] <= PROB_FLOOR {
                        return Err(LoccError::ImpossibleOutcome { outcome });
                    }
                    Ok((outcome, probs[outcome]))
                } else {
                    let live: Vec<usize> = (0..probs.len())
                        .filter(|&c| probs[c] > PROB_FLOOR)
                        .collect();
                    let first = live[0];
                    for &alt in &live[1..] {
                        let mut script = self.path.clone();
                        script.push(alt);
                        self.spawned.push(script);
                    }
                    Ok((first, probs[first]))
                }
            }
        }
    }

    /// Projective measurement of the listed registers, outcomes grouped by
    /// `class_of` over their joint basis value.
    pub fn local_measure_coarse(
        &mut self,
        party: Party,
        ids: &[RegisterId],
        class_of: &dyn Fn(usize) -> usize,
        classes: usize,
    ) -> LoccResult<usize> {
        let positions = self.owned_positions(party, ids)?;
        let probs = self.state.outcome_probabilities(&positions, class_of, classes)?;
        let (outcome, p) = self.draw_outcome(&probs)?;
        self.state = self.state.project_class(&positions, class_of, outcome, p);
        self.path.push(outcome);
        self.path_probs.push(p);
        self.transcript.push(Event::Measure {
            party,
            registers: ids.to_vec(),
            outcome,
        });
        Ok(outcome)
    }

    /// Full-basis projective measurement; the outcome is the joint basis
    /// value of the listed registers in list order.
    pub fn local_measure(&mut self, party: Party, ids: &[RegisterId]) -> LoccResult<usize> {
        let positions = self.owned_positions(party, ids)?;
        let span: usize = positions.iter().map(|&p| self.registers[p].dim).product();
        self.local_measure_coarse(party, ids, &|v| v, span)
    }

    /// Sends a classical value; bit ledgers take exact log2(domain) and its
    /// integer ceiling.
    pub fn send(&mut self, from: Party, to: Party, value: usize, domain: usize) -> LoccResult<()> {
        if from == to {
            return Err(LoccError::MessageLoop);
        }
        if domain < 2 {
            return Err(LoccError::MessageDomain { domain });
        }
        if value >= domain {
            return Err(LoccError::MessageValue { value, domain });
        }
        let bits = (domain as f64).log2();
        let ceiling = bits.ceil() as u64;
        match from {
            Party::Alice => {
                self.bits_a_to_b += bits;
                self.bits_a_to_b_ceiling += ceiling;
            }
            Party::Bob => {
                self.bits_b_to_a += bits;
                self.bits_b_to_a_ceiling += ceiling;
            }
        }
        self.transcript.push(Event::Message {
            party: from,
            registers: Vec::new(),
            value,
            domain,
            bits,
        });
        Ok(())
    }

    /// Removes registers that are in a product state with the remainder.
    pub fn discard(&mut self, ids: &[RegisterId]) -> LoccResult<()> {
        let positions = self.positions(ids)?;
        let owners: Vec<Party> = positions.iter().map(|&p| self.registers[p].owner).collect();
        if positions.len() == self.registers.len() {
            self.registers.clear();
            self.state = PureState::scalar();
        } else {
            let purity = self.state.reduced_density(&positions)?.purity();
            if purity < 1.0 - ALGEBRAIC_TOL {
                return Err(LoccError::NotProduct {
                    ids: ids.to_vec(),
                    purity,
                });
            }
            self.state = self.state.slice_out(&positions)?;
            let mut sorted = positions;
            sorted.sort_unstable();
            for p in sorted.into_iter().rev() {
                self.registers.remove(p);
            }
        }
        for party in [Party::Alice, Party::Bob] {
            let group: Vec<RegisterId> = ids
                .iter()
                .zip(&owners)
                .filter(|&(_, &owner)| owner == party)
                .map(|(&id, _)| id)
                .collect();
            if !group.is_empty() {
                self.transcript.push(Event::Discard {
                    party,
                    registers: group,
                });
            }
        }
        Ok(())
    }

    /// Replaces a party's registers with one register of dimension
    /// `new_dim`; amplitude at joint value v moves to basis value map(v).
    /// Physically an ancilla, a local unitary, then a discard, and it is
    /// transcripted as that sequence.
    pub fn local_relabel(
        &mut self,
        party: Party,
        ids: &[RegisterId],
        new_dim: usize,
        map: &dyn Fn(usize) -> Option<usize>,
    ) -> LoccResult<RegisterId> {
        if new_dim < 2 {
            return Err(LoccError::RegisterDim { dim: new_dim });
        }
        let positions = self.owned_positions(party, ids)?;
        self.state = self.state.relabel(&positions, new_dim, map)?;
        let mut sorted = positions;
        sorted.sort_unstable();
        for p in sorted.into_iter().rev() {
            self.registers.remove(p);
        }
        let new_id = self.alloc(format!("rel{}", self.next_id), new_dim, party);
        self.transcript.push(Event::Ancilla {
            party,
            registers: vec![new_id],
            value: 0,
        });
        let mut touched = ids.to_vec();
        touched.push(new_id);
        self.transcript.push(Event::Unitary {
            party,
            registers: touched,
        });
        self.transcript.push(Event::Discard {
            party,
            registers: ids.to_vec(),
        });
        Ok(new_id)
    }

    /// Splits a register into consecutive parts whose dimensions multiply
    /// to its own. Bookkeeping only: mixed-radix nesting keeps the flat
    /// amplitude order unchanged, so no physical operation happens and
    /// nothing is transcripted.
    pub fn split_register(
        &mut self,
        id: RegisterId,
        part_dims: &[usize],
    ) -> LoccResult<Vec<RegisterId>> {
        let pos = self.position(id)?;
        let dim = self.registers[pos].dim;
        let product: usize = part_dims.iter().product();
        if product != dim {
            return Err(LoccError::SplitMismatch { dim, product });
        }
        for &d in part_dims {
            if d < 2 {
                return Err(LoccError::RegisterDim { dim: d });
            }
        }
        let owner = self.registers[pos].owner;
        self.registers.remove(pos);
        let mut ids = Vec::with_capacity(part_dims.len());
        for (k, &d) in part_dims.iter().enumerate() {
            let new_id = self.next_id;
            self.next_id += 1;
            self.registers.insert(
                pos + k,
                Register {
                    id: new_id,
                    name: format!("spl{new_id}"),
                    dim: d,
                    owner,
                },
            );
            ids.push(new_id);
        }
        let dims: Vec<usize> = self.registers.iter().map(|r| r.dim).collect();
        self.state = self.state.reshape(dims)?;
        Ok(ids)
    }

    /// Pure state of the listed registers (in session order), which must be
    /// in a product state with the remainder. Nondestructive.
    pub fn register_state(&self, ids: &[RegisterId]) -> LoccResult<PureState> {
        let positions = self.positions(ids)?;
        if positions.len() == self.registers.len() {
            return Ok(self.state.clone());
        }
        let purity = self.state.reduced_density(&positions)?.purity();
        if purity < 1.0 - ALGEBRAIC_TOL {
            return Err(LoccError::NotProduct {
                ids: ids.to_vec(),
                purity,
            });
        }
        let others: Vec<usize> = (0..self.registers.len())
            .filter(|p| !positions.contains(p))
            .collect();
        Ok(self.state.slice_out(&others)?)
    }

    pub fn cost_summary(&self) -> CostSummary {
        CostSummary {
            bits_a_to_b: self.bits_a_to_b,
            bits_a_to_b_ceiling: self.bits_a_to_b_ceiling,
            bits_b_to_a: self.bits_b_to_a,
            bits_b_to_a_ceiling: self.bits_b_to_a_ceiling,
            ebits_consumed: self.ebits_consumed,
            transcript_len: self.transcript.len(),
        }
    }
}
