use alloc::format;
use alloc::vec::Vec;

use super::{ErrorReport, FunctionSpec, Party};
use crate::prob::{validate_probs, Alphabet, JointDist};
use crate::{Error, Result};

/// A simultaneous-message protocol: Alice and Bob each send one message to
/// a referee, who answers from the pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulProtocol {
    x: Alphabet,
    y: Alphabet,
    z: Alphabet,
    alice_messages: Alphabet,
    bob_messages: Alphabet,
    /// `alice[x * |M_A| + m]`.
    alice: Vec<f64>,
    /// `bob[y * |M_B| + m]`.
    bob: Vec<f64>,
    /// `referee[m_a * |M_B| + m_b]`.
    referee: Vec<usize>,
}

impl SimulProtocol {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x: Alphabet,
        y: Alphabet,
        z: Alphabet,
        alice_messages: Alphabet,
        bob_messages: Alphabet,
        alice: Vec<f64>,
        bob: Vec<f64>,
        referee: Vec<usize>,
    ) -> Result<Self> {
        let p = Self { x, y, z, alice_messages, bob_messages, alice, bob, referee };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        for party in [Party::Alice, Party::Bob] {
            let (inputs, msgs, table) = match party {
                Party::Alice => (&self.x, &self.alice_messages, &self.alice),
                Party::Bob => (&self.y, &self.bob_messages, &self.bob),
            };
            if table.len() != inputs.len() * msgs.len() {
                return Err(Error::MalformedProtocol(format!("{party:?} policy has wrong size")));
            }
            for (u, row) in table.chunks(msgs.len()).enumerate() {
                validate_probs(row)
                    .map_err(|e| Error::MalformedProtocol(format!("{party:?} input {u}: {e}")))?;
            }
        }
        if self.referee.len() != self.alice_messages.len() * self.bob_messages.len() {
            return Err(Error::MalformedProtocol("referee table has wrong size".into()));
        }
        if let Some(z) = self.referee.iter().find(|&&z| z >= self.z.len()) {
            return Err(Error::MalformedProtocol(format!("referee outputs {z}")));
        }
        Ok(())
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    pub fn z_alphabet(&self) -> &Alphabet {
        &self.z
    }

    pub fn alice_messages(&self) -> &Alphabet {
        &self.alice_messages
    }

    pub fn bob_messages(&self) -> &Alphabet {
        &self.bob_messages
    }

    pub fn alice_law(&self, x: usize) -> &[f64] {
        let n = self.alice_messages.len();
        &self.alice[x * n..(x + 1) * n]
    }

    pub fn bob_law(&self, y: usize) -> &[f64] {
        let n = self.bob_messages.len();
        &self.bob[y * n..(y + 1) * n]
    }

    pub fn referee(&self, ma: usize, mb: usize) -> usize {
        self.referee[ma * self.bob_messages.len() + mb]
    }

    pub fn referee_table(&self) -> &[usize] {
        &self.referee
    }

    /// Replaces one party's message laws, keeping the alphabets.
    pub fn with_laws(&self, party: Party, table: Vec<f64>) -> Result<Self> {
        let mut p = self.clone();
        match party {
            Party::Alice => p.alice = table,
            Party::Bob => p.bob = table,
        }
        p.validate()?;
        Ok(p)
    }

    /// `Pr[referee answers acceptably | Alice sends ma, input (x, y)]`.
    pub fn success_given_alice(&self, f: &FunctionSpec, x: usize, y: usize, ma: usize) -> f64 {
        self.bob_law(y)
            .iter()
            .enumerate()
            .filter(|&(mb, _)| f.accepts(x, y, self.referee(ma, mb)))
            .map(|(_, p)| p)
            .sum()
    }

    /// `Pr[referee answers acceptably | Bob sends mb, input (x, y)]`.
    pub fn success_given_bob(&self, f: &FunctionSpec, x: usize, y: usize, mb: usize) -> f64 {
        self.alice_law(x)
            .iter()
            .enumerate()
            .filter(|&(ma, _)| f.accepts(x, y, self.referee(ma, mb)))
            .map(|(_, p)| p)
            .sum()
    }

    /// Exact error probability on `(x, y)`.
    pub fn error_at(&self, f: &FunctionSpec, x: usize, y: usize) -> f64 {
        let ok: f64 = self
            .alice_law(x)
            .iter()
            .enumerate()
            .map(|(ma, pa)| pa * self.success_given_alice(f, x, y, ma))
            .sum();
        (1.0 - ok).max(0.0)
    }

    pub fn evaluate_error(&self, f: &FunctionSpec, mu: &JointDist) -> Result<ErrorReport> {
        if f.x_alphabet() != &self.x || f.y_alphabet() != &self.y || f.z_alphabet() != &self.z {
            return Err(Error::RangeMismatch("function and protocol ranges differ".into()));
        }
        if mu.sizes() != [self.x.len(), self.y.len()] {
            return Err(Error::RangeMismatch("input distribution has the wrong shape".into()));
        }
        let per_input = (0..self.x.len())
            .flat_map(|x| (0..self.y.len()).map(move |y| (x, y)))
            .map(|(x, y)| self.error_at(f, x, y))
            .collect();
        Ok(ErrorReport::from_per_input(per_input, mu.probs()))
    }

    /// Row-major `(input, message)` joint of one party under input marginal `mu`.
    pub fn message_joint(&self, party: Party, mu: &[f64]) -> Vec<f64> {
        let (n, table) = match party {
            Party::Alice => (self.alice_messages.len(), &self.alice),
            Party::Bob => (self.bob_messages.len(), &self.bob),
        };
        table.iter().enumerate().map(|(c, p)| mu[c / n] * p).collect()
    }

    /// `I(input : message)` for one party under input marginal `mu`.
    pub fn information(&self, party: Party, mu: &[f64]) -> f64 {
        let n = match party {
            Party::Alice => self.alice_messages.len(),
            Party::Bob => self.bob_messages.len(),
        };
        crate::prob::joint::mi_of_matrix(&self.message_joint(party, mu), mu.len(), n)
    }
}
