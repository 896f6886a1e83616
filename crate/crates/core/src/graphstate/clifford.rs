//! The 24-element single-qubit Clifford group, modulo global phase.
//!
//! Elements are enumerated once by breadth-first search from the identity
//! over right multiplication by `H` and `S`; each gets the shortest word
//! found that way as its canonical label. Words are read as operator
//! products, so `"HX"` is the matrix `H·X` (X acts first).

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::C64;

type M2 = [[C64; 2]; 2];

const TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn adjoint(a: &M2) -> M2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Rescales by a phase so the first entry of non-negligible size is real and positive.
fn normalize(m: &M2) -> M2 {
    let pivot = m.iter().flatten().find(|z| z.norm() > TOL).copied().unwrap_or(c(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    let mut out = *m;
    for z in out.iter_mut().flatten() {
        *z *= phase;
    }
    out
}

fn same(a: &M2, b: &M2) -> bool {
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).norm() < TOL)
}

fn gate(name: &str) -> Option<M2> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    Some(match name {
        "I" => [[o, z], [z, o]],
        "X" => [[z, o], [o, z]],
        "Y" => [[z, -i], [i, z]],
        "Z" => [[o, z], [z, -o]],
        "H" => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        "S" => [[o, z], [z, i]],
        "Sdg" => [[o, z], [z, -i]],
        _ => return None,
    })
}

struct Table {
    mats: Vec<M2>,
    words: Vec<String>,
    mul: Vec<[u8; 24]>,
    inv: [u8; 24],
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let gens = [("H", gate("H").unwrap()), ("S", gate("S").unwrap())];
        let mut mats = vec![normalize(&gate("I").unwrap())];
        let mut words = vec![String::new()];
        let mut head = 0;
        while head < mats.len() {
            for (name, g) in &gens {
                let next = normalize(&mul(&mats[head], g));
                if !mats.iter().any(|m| same(m, &next)) {
                    mats.push(next);
                    words.push(format!("{}{}", words[head], name));
                }
            }
            head += 1;
        }
        assert_eq!(mats.len(), 24, "single-qubit Clifford group has 24 elements mod phase");
        let find = |m: &M2| mats.iter().position(|x| same(x, &normalize(m))).expect("closed group") as u8;
        let mul_table: Vec<[u8; 24]> = (0..24)
            .map(|a| {
                let mut row = [0u8; 24];
                for (b, slot) in row.iter_mut().enumerate() {
                    *slot = find(&mul(&mats[a], &mats[b]));
                }
                row
            })
            .collect();
        let mut inv = [0u8; 24];
        for (a, slot) in inv.iter_mut().enumerate() {
            *slot = (0..24u8).find(|&b| mul_table[a][b as usize] == 0).expect("inverse exists");
        }
        let words = words.into_iter().map(|w| if w.is_empty() { "I".to_string() } else { w }).collect();
        Table { mats, words, mul: mul_table, inv }
    })
}

/// Canonical element of the single-qubit Clifford group.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clifford(u8);

impl Clifford {
    pub const ORDER: usize = 24;

    pub fn identity() -> Self {
        Clifford(0)
    }

    pub fn all() -> impl Iterator<Item = Clifford> {
        (0..24u8).map(Clifford)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        (i < 24).then_some(Clifford(i as u8))
    }

    fn named(name: &str) -> Self {
        Clifford::from_matrix(&gate(name).expect("known gate")).expect("Clifford gate")
    }

    pub fn x() -> Self {
        Self::named("X")
    }

    pub fn y() -> Self {
        Self::named("Y")
    }

    pub fn z() -> Self {
        Self::named("Z")
    }

    pub fn h() -> Self {
        Self::named("H")
    }

    pub fn s() -> Self {
        Self::named("S")
    }

    pub fn sdg() -> Self {
        Self::named("Sdg")
    }

    /// Looks a unitary up in the group, ignoring global phase.
    pub fn from_matrix(m: &M2) -> Option<Self> {
        let n = normalize(m);
        table().mats.iter().position(|x| same(x, &n)).map(|i| Clifford(i as u8))
    }

    /// Parses a word over `I, X, Y, Z, H, S, Sdg`, read as an operator product.
    pub fn parse(word: &str) -> Result<Self> {
        let mut out = Clifford::identity();
        let mut rest = word.trim();
        while !rest.is_empty() {
            let (tok, tail) = if let Some(t) = rest.strip_prefix("Sdg") {
                ("Sdg", t)
            } else {
                rest.split_at(rest.chars().next().map_or(0, |ch| ch.len_utf8()))
            };
            let g = gate(tok).ok_or_else(|| Error::graph(format!("unknown gate '{tok}' in word '{word}'")))?;
            out = out * Clifford::from_matrix(&g).expect("Clifford gate");
            rest = tail.trim_start();
        }
        Ok(out)
    }

    pub fn matrix(self) -> M2 {
        table().mats[self.index()]
    }

    pub fn word(self) -> &'static str {
        &table().words[self.index()]
    }

    pub fn inverse(self) -> Self {
        Clifford(table().inv[self.index()])
    }

    pub fn is_identity(self) -> bool {
        self.0 == 0
    }

    /// How a Z measurement on `self|ψ⟩` reads on `|ψ⟩`: `Some(false)` if the
    /// outcome is unchanged, `Some(true)` if flipped, `None` if the frame
    /// turns it into a different Pauli measurement.
    pub fn z_measurement_flip(self) -> Option<bool> {
        let m = self.matrix();
        let conj = mul(&adjoint(&m), &mul(&gate("Z").unwrap(), &m));
        let z = gate("Z").unwrap();
        if same(&conj, &z) {
            Some(false)
        } else if same(&conj, &mul(&z, &[[c(-1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]])) {
            Some(true)
        } else {
            None
        }
    }
}

impl std::ops::Mul for Clifford {
    type Output = Clifford;
    /// Operator product: `(a * b)` applies `b` first.
    fn mul(self, rhs: Clifford) -> Clifford {
        Clifford(table().mul[self.index()][rhs.index()])
    }
}

impl Default for Clifford {
    fn default() -> Self {
        Clifford::identity()
    }
}

impl fmt::Debug for Clifford {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Clifford({})", self.word())
    }
}

impl fmt::Display for Clifford {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

impl Serialize for Clifford {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.word())
    }
}

impl<'de> Deserialize<'de> for Clifford {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Clifford::parse(&s).map_err(serde::de::Error::custom)
    }
}
