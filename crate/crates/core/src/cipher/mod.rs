//! Reference LED-64 and AES-128 with an injectable Sbox table.
//!
//! Both ciphers operate on a 4x4 [`CipherState`] of s-bit cells. Cells are
//! addressed `(row, col)` and linearised row-major, `index = 4 * row + col`.
//! Blocks are loaded the way each cipher's own definition loads them:
//!
//! * AES-128: byte `i` of the block goes to `(i % 4, i / 4)` (column-major,
//!   as in FIPS-197).
//! * LED-64: nibble `i`, counted from the most significant nibble of the
//!   64-bit block, goes to `(i / 4, i % 4)`.
//!
//! The Sbox used for the data path is always supplied by the caller, so a
//! faulted table is consulted at every lookup of every round. The AES key
//! schedule always uses the clean table.

pub mod aes;
pub(crate) mod gf;
pub mod led;
pub mod toy;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, contract, Error, Result};

/// A 64-bit (LED) or 128-bit (AES) block, right-aligned.
pub type Block = u128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CipherId {
    Led64,
    Aes128,
}

impl CipherId {
    /// Width `s` of one state cell and of the Sbox.
    pub fn cell_bits(self) -> u32 {
        match self {
            CipherId::Led64 => 4,
            CipherId::Aes128 => 8,
        }
    }

    pub fn block_bits(self) -> u32 {
        self.cell_bits() * 16
    }

    pub fn key_bits(self) -> u32 {
        self.block_bits()
    }

    /// The round whose Sbox output the statistical attack observes (1-based).
    pub fn attack_round(self) -> usize {
        CipherSpec::new(self).rounds - 1
    }

    pub fn clean_sbox(self) -> SboxTable {
        match self {
            CipherId::Led64 => SboxTable::present(),
            CipherId::Aes128 => SboxTable::aes(),
        }
    }

    pub fn state_from_block(self, block: Block) -> CipherState {
        let mut cells = [0u8; 16];
        match self {
            CipherId::Aes128 => {
                let bytes = block.to_be_bytes();
                for (i, b) in bytes.iter().enumerate() {
                    cells[4 * (i % 4) + i / 4] = *b;
                }
            }
            CipherId::Led64 => {
                for (i, cell) in cells.iter_mut().enumerate() {
                    *cell = ((block >> (60 - 4 * i)) & 0xf) as u8;
                }
            }
        }
        CipherState { cells }
    }

    pub fn block_from_state(self, state: &CipherState) -> Block {
        match self {
            CipherId::Aes128 => {
                let mut bytes = [0u8; 16];
                for (i, b) in bytes.iter_mut().enumerate() {
                    *b = state.cells[4 * (i % 4) + i / 4];
                }
                u128::from_be_bytes(bytes)
            }
            CipherId::Led64 => state
                .cells
                .iter()
                .fold(0u128, |acc, &c| (acc << 4) | u128::from(c & 0xf)),
        }
    }

    /// Mask of valid block bits.
    pub fn block_mask(self) -> Block {
        match self {
            CipherId::Led64 => u128::from(u64::MAX),
            CipherId::Aes128 => u128::MAX,
        }
    }

    pub fn parse_block(self, hex: &str) -> Result<Block> {
        let digits = (self.block_bits() / 4) as usize;
        let hex = hex.trim().trim_start_matches("0x");
        if hex.len() != digits {
            return config(format!(
                "{self} blocks are {digits} hex digits, got {} ({hex:?})",
                hex.len()
            ));
        }
        u128::from_str_radix(hex, 16).map_err(|e| Error::Config(format!("bad hex block {hex:?}: {e}")))
    }

    pub fn format_block(self, block: Block) -> String {
        let digits = (self.block_bits() / 4) as usize;
        format!("{:0digits$x}", block & self.block_mask())
    }
}

impl fmt::Display for CipherId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CipherId::Led64 => "led64",
            CipherId::Aes128 => "aes128",
        })
    }
}

impl FromStr for CipherId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "led64" | "led" | "led-64" => Ok(CipherId::Led64),
            "aes128" | "aes" | "aes-128" => Ok(CipherId::Aes128),
            other => config(format!("unknown cipher {other:?}")),
        }
    }
}

/// A substitution table of width `s` bits; possibly faulted, hence not
/// necessarily a bijection.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SboxTable {
    width: u32,
    entries: Vec<u8>,
}

impl SboxTable {
    pub fn new(width: u32, entries: Vec<u8>) -> Result<Self> {
        if width != 4 && width != 8 {
            return config(format!("Sbox width must be 4 or 8 bits, got {width}"));
        }
        let size = 1usize << width;
        if entries.len() != size {
            return config(format!(
                "a {width}-bit Sbox has {size} entries, got {}",
                entries.len()
            ));
        }
        if let Some((i, v)) = entries.iter().enumerate().find(|(_, &v)| usize::from(v) >= size) {
            return config(format!("Sbox entry {i} = {v:#x} exceeds {width} bits"));
        }
        Ok(SboxTable { width, entries })
    }

    pub fn aes() -> Self {
        SboxTable { width: 8, entries: aes::SBOX.to_vec() }
    }

    /// The PRESENT Sbox, used by LED.
    pub fn present() -> Self {
        SboxTable { width: 4, entries: led::SBOX.to_vec() }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, x: u8) -> u8 {
        self.entries[usize::from(x)]
    }

    pub(crate) fn set(&mut self, index: usize, value: u8) {
        self.entries[index] = value;
    }

    pub fn is_bijective(&self) -> bool {
        let mut seen = vec![false; self.len()];
        self.entries.iter().all(|&v| !std::mem::replace(&mut seen[usize::from(v)], true))
    }

    /// Inverse table. Partial decryption is only meaningful with a clean
    /// (bijective) table, so anything else is a contract violation.
    pub fn inverse(&self) -> Result<SboxTable> {
        if !self.is_bijective() {
            return contract("cannot invert a non-bijective Sbox table");
        }
        let mut inv = vec![0u8; self.len()];
        for (x, &y) in self.entries.iter().enumerate() {
            inv[usize::from(y)] = x as u8;
        }
        Ok(SboxTable { width: self.width, entries: inv })
    }

    /// Indices where `self` and `other` disagree.
    pub fn diff_indices(&self, other: &SboxTable) -> Result<Vec<usize>> {
        if self.width != other.width {
            return config(format!(
                "Sbox widths differ: {} vs {} bits",
                self.width, other.width
            ));
        }
        Ok((0..self.len()).filter(|&i| self.entries[i] != other.entries[i]).collect())
    }
}

/// Whitespace-separated hex entries; the width is inferred from the count.
impl FromStr for SboxTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split_whitespace()
            .map(|tok| {
                let tok = tok.trim_start_matches("0x");
                u8::from_str_radix(tok, 16)
                    .map_err(|e| Error::Config(format!("bad Sbox entry {tok:?}: {e}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        let width = match entries.len() {
            16 => 4,
            256 => 8,
            n => return config(format!("Sbox file must hold 16 or 256 entries, found {n}")),
        };
        SboxTable::new(width, entries)
    }
}

impl fmt::Display for SboxTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = if self.width == 4 { 1 } else { 2 };
        for row in self.entries.chunks(16) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:0digits$x}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// 4x4 matrix of s-bit cells, row-major (`index = 4 * row + col`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CipherState {
    pub cells: [u8; 16],
}

impl CipherState {
    pub fn new(cells: [u8; 16]) -> Self {
        CipherState { cells }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[4 * row + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: u8) {
        self.cells[4 * row + col] = v;
    }

    pub fn column(&self, col: usize) -> [u8; 4] {
        [self.get(0, col), self.get(1, col), self.get(2, col), self.get(3, col)]
    }

    pub fn set_column(&mut self, col: usize, v: [u8; 4]) {
        for (row, x) in v.into_iter().enumerate() {
            self.set(row, col, x);
        }
    }

    pub fn xor(&self, other: &CipherState) -> CipherState {
        let mut cells = self.cells;
        for (c, o) in cells.iter_mut().zip(other.cells) {
            *c ^= o;
        }
        CipherState { cells }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CipherKey {
    Led64(u64),
    Aes128([u8; 16]),
}

impl CipherKey {
    pub fn cipher(&self) -> CipherId {
        match self {
            CipherKey::Led64(_) => CipherId::Led64,
            CipherKey::Aes128(_) => CipherId::Aes128,
        }
    }

    pub fn to_u128(&self) -> u128 {
        match self {
            CipherKey::Led64(k) => u128::from(*k),
            CipherKey::Aes128(k) => u128::from_be_bytes(*k),
        }
    }

    pub fn from_u128(cipher: CipherId, bits: u128) -> Self {
        match cipher {
            CipherId::Led64 => CipherKey::Led64(bits as u64),
            CipherId::Aes128 => CipherKey::Aes128(bits.to_be_bytes()),
        }
    }

    pub fn parse(cipher: CipherId, hex: &str) -> Result<Self> {
        cipher.parse_block(hex).map(|b| Self::from_u128(cipher, b))
    }

    pub fn to_hex(&self) -> String {
        self.cipher().format_block(self.to_u128())
    }
}

impl fmt::Display for CipherKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// How Sbox tables are instantiated across the 16 cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SboxLayout {
    /// One shared table for every cell and round.
    #[default]
    Serial,
    /// One table per state cell. Declared for configuration files; not
    /// simulated.
    PerCell,
}

/// Published constants of a cipher variant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CipherSpec {
    pub id: CipherId,
    pub rounds: usize,
    /// LED: 6-bit AddConstants values per round. AES: key-schedule `Rcon`.
    pub round_constants: &'static [u8],
    pub mix_matrix: [[u8; 4]; 4],
    pub mix_matrix_inverse: [[u8; 4]; 4],
    /// Irreducible polynomial of the MixColumns field, including the top bit.
    pub field_poly: u16,
    /// Left rotation of each state row in ShiftRows.
    pub shift_offsets: [usize; 4],
    pub sbox_layout: SboxLayout,
}

impl CipherSpec {
    pub fn new(id: CipherId) -> Self {
        match id {
            CipherId::Led64 => CipherSpec {
                id,
                rounds: led::ROUNDS,
                round_constants: &led::ROUND_CONSTANTS,
                mix_matrix: led::MIX,
                mix_matrix_inverse: led::MIX_INV,
                field_poly: led::FIELD_POLY,
                shift_offsets: [0, 1, 2, 3],
                sbox_layout: SboxLayout::Serial,
            },
            CipherId::Aes128 => CipherSpec {
                id,
                rounds: aes::ROUNDS,
                round_constants: &aes::RCON,
                mix_matrix: aes::MIX,
                mix_matrix_inverse: aes::MIX_INV,
                field_poly: aes::FIELD_POLY,
                shift_offsets: [0, 1, 2, 3],
                sbox_layout: SboxLayout::Serial,
            },
        }
    }

    fn check(&self, key: &CipherKey, block: Block, sbox: &SboxTable) -> Result<()> {
        if self.sbox_layout != SboxLayout::Serial {
            return Err(Error::Unsupported("per-cell Sbox tables are not simulated".into()));
        }
        if key.cipher() != self.id {
            return config(format!("{} key given to {}", key.cipher(), self.id));
        }
        if sbox.width() != self.id.cell_bits() {
            return config(format!(
                "{} needs a {}-bit Sbox, got {} bits",
                self.id,
                self.id.cell_bits(),
                sbox.width()
            ));
        }
        if block & !self.id.block_mask() != 0 {
            return config(format!("block wider than {} bits", self.id.block_bits()));
        }
        Ok(())
    }
}

/// Which table each round's Sbox layer uses.
#[derive(Clone, Copy, Debug)]
pub enum SboxSchedule<'a> {
    /// The same (possibly faulted) table in every round.
    Persistent(&'a SboxTable),
    /// `faulty` only in the given 1-based round, `clean` elsewhere.
    OnlyRound { round: usize, faulty: &'a SboxTable, clean: &'a SboxTable },
}

impl<'a> SboxSchedule<'a> {
    /// Table for 1-based round `round`.
    #[inline]
    pub fn table(&self, round: usize) -> &'a SboxTable {
        match *self {
            SboxSchedule::Persistent(t) => t,
            SboxSchedule::OnlyRound { round: r, faulty, clean } => {
                if r == round {
                    faulty
                } else {
                    clean
                }
            }
        }
    }

    fn tables(&self) -> impl Iterator<Item = &'a SboxTable> {
        let (a, b) = match *self {
            SboxSchedule::Persistent(t) => (t, None),
            SboxSchedule::OnlyRound { faulty, clean, .. } => (faulty, Some(clean)),
        };
        std::iter::once(a).chain(b)
    }
}

pub fn encrypt(desc: &CipherSpec, key: &CipherKey, plaintext: Block, sbox: &SboxTable) -> Result<Block> {
    encrypt_scheduled(desc, key, plaintext, SboxSchedule::Persistent(sbox))
}

pub fn encrypt_scheduled(
    desc: &CipherSpec,
    key: &CipherKey,
    plaintext: Block,
    schedule: SboxSchedule<'_>,
) -> Result<Block> {
    for t in schedule.tables() {
        desc.check(key, plaintext, t)?;
    }
    Ok(match key {
        CipherKey::Aes128(k) => {
            let rk = aes::key_schedule(k);
            aes::encrypt_block(&rk, plaintext, schedule)
        }
        CipherKey::Led64(k) => u128::from(led::encrypt_block(*k, plaintext as u64, schedule)),
    })
}

/// Full inverse cipher with the clean table.
pub fn decrypt(desc: &CipherSpec, key: &CipherKey, ciphertext: Block) -> Result<Block> {
    let clean = desc.id.clean_sbox();
    desc.check(key, ciphertext, &clean)?;
    Ok(match key {
        CipherKey::Aes128(k) => aes::decrypt_block(&aes::key_schedule(k), ciphertext),
        CipherKey::Led64(k) => u128::from(led::decrypt_block(*k, ciphertext as u64)),
    })
}

/// Cells `(r, (col - r) mod 4)`, `r = 0..4`: the positions that inverse
/// ShiftRows gathers into column `col`. Both ciphers rotate row `r` left by
/// `r`, so this is shared.
pub fn diagonal_cells(col: usize) -> [usize; 4] {
    core::array::from_fn(|r| 4 * r + (col + 4 - r) % 4)
}

/// Pre-expanded encryptor for bulk collection.
#[derive(Clone, Debug)]
pub struct Encryptor {
    id: CipherId,
    aes_keys: Option<[CipherState; 11]>,
    led_key: u64,
}

impl Encryptor {
    pub fn new(desc: &CipherSpec, key: &CipherKey, sbox: &SboxTable) -> Result<Self> {
        desc.check(key, 0, sbox)?;
        Ok(match key {
            CipherKey::Aes128(k) => Encryptor {
                id: desc.id,
                aes_keys: Some(aes::key_schedule(k)),
                led_key: 0,
            },
            CipherKey::Led64(k) => Encryptor { id: desc.id, aes_keys: None, led_key: *k },
        })
    }

    pub fn encrypt(&self, plaintext: Block, schedule: SboxSchedule<'_>) -> Block {
        match self.id {
            CipherId::Aes128 => {
                aes::encrypt_block(self.aes_keys.as_ref().expect("aes keys"), plaintext, schedule)
            }
            CipherId::Led64 => u128::from(led::encrypt_block(self.led_key, plaintext as u64, schedule)),
        }
    }
}
