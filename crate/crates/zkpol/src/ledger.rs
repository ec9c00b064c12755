//! Simulated proof-of-work ledger.
//!
//! Access points post certificate digests; servers post service records
//! that mark a certificate as spent. Entries sit in a pending pool until a
//! miner packages them into a block whose hash clears a fixed
//! leading-zero-bits difficulty. Queries (`contains_digest`,
//! `contains_record`) only consult mined blocks, so a certificate is usable
//! only after confirmation, and a service record submitted twice is
//! rejected whether the first copy is still pending or already mined.

use std::io::{Read, Write};
use std::path::Path;

use rand::RngCore;
use thiserror::Error;

use crate::field::{Field, FieldElement};
use crate::hash::hash_bytes;

const FILE_MAGIC: &[u8; 8] = b"ZKPOLLGR";
const FILE_VERSION: u8 = 1;
const ENTRY_DIGEST: u8 = 0x01;
const ENTRY_RECORD: u8 = 0x02;

/// Default proof-of-work difficulty in leading zero bits.
pub const DEFAULT_DIFFICULTY: u32 = 12;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("service record already submitted")]
    AlreadyServed,
    #[error("malformed ledger data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why chain validation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Stored hash disagrees with the recomputed block contents.
    HashMismatch,
    /// Hash does not clear the difficulty target.
    InsufficientWork,
    /// `prev_hash` does not match the previous block's hash.
    BrokenLink,
    /// Block index out of sequence.
    BadIndex,
    /// Genesis `prev_hash` is not all zeros.
    BadGenesis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainViolation {
    pub index: u64,
    pub kind: ViolationKind,
}

/// One ledger entry: a posted certificate digest or a spent-certificate
/// record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entry {
    Digest(FieldElement),
    ServiceRecord {
        pk_server: Vec<u8>,
        ind: u64,
        hr: FieldElement,
    },
}

impl Entry {
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Entry::Digest(d) => {
                let mut out = vec![ENTRY_DIGEST];
                out.extend_from_slice(&d.to_bytes());
                out
            }
            Entry::ServiceRecord { pk_server, ind, hr } => {
                let mut out = vec![ENTRY_RECORD];
                out.extend_from_slice(&(pk_server.len() as u16).to_be_bytes());
                out.extend_from_slice(pk_server);
                out.extend_from_slice(&ind.to_be_bytes());
                out.extend_from_slice(&hr.to_bytes());
                out
            }
        }
    }

    fn read_from(buf: &[u8], pos: &mut usize, field: &Field) -> Result<Entry, LedgerError> {
        let take = |pos: &mut usize, n: usize| -> Result<&[u8], LedgerError> {
            if *pos + n > buf.len() {
                return Err(LedgerError::Format("truncated entry".into()));
            }
            let s = &buf[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let w = field.byte_len();
        match take(pos, 1)?[0] {
            ENTRY_DIGEST => {
                let d = field
                    .element_from_bytes(take(pos, w)?)
                    .map_err(|e| LedgerError::Format(e.to_string()))?;
                Ok(Entry::Digest(d))
            }
            ENTRY_RECORD => {
                let len = u16::from_be_bytes(take(pos, 2)?.try_into().unwrap()) as usize;
                let pk_server = take(pos, len)?.to_vec();
                let ind = u64::from_be_bytes(take(pos, 8)?.try_into().unwrap());
                let hr = field
                    .element_from_bytes(take(pos, w)?)
                    .map_err(|e| LedgerError::Format(e.to_string()))?;
                Ok(Entry::ServiceRecord { pk_server, ind, hr })
            }
            other => Err(LedgerError::Format(format!("unknown entry tag {other:#04x}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    pub prev_hash: [u8; 32],
    pub timestamp: u64,
    pub miner: Vec<u8>,
    pub entries: Vec<Entry>,
    pub nonce: u64,
    pub hash: [u8; 32],
}

impl Block {
    /// Everything the hash covers, in fixed order; the stored hash itself
    /// is excluded.
    fn preimage(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.index.to_be_bytes());
        out.extend_from_slice(&self.prev_hash);
        out.extend_from_slice(&self.timestamp.to_be_bytes());
        out.extend_from_slice(&(self.miner.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.miner);
        out.extend_from_slice(&(self.entries.len() as u32).to_be_bytes());
        for e in &self.entries {
            out.extend_from_slice(&e.to_bytes());
        }
        out.extend_from_slice(&self.nonce.to_be_bytes());
        out
    }

    pub fn compute_hash(&self) -> [u8; 32] {
        hash_bytes(&self.preimage())
    }

    /// Recomputes the stored hash in place (after the harness edits a
    /// block, this plus a nonce search makes it internally valid again).
    pub fn remine(&mut self, difficulty: u32) {
        loop {
            self.hash = self.compute_hash();
            if leading_zero_bits(&self.hash) >= difficulty {
                return;
            }
            self.nonce = self.nonce.wrapping_add(1);
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.preimage();
        out.extend_from_slice(&self.hash);
        out
    }

    pub fn from_bytes(bytes: &[u8], field: &Field) -> Result<Block, LedgerError> {
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8], LedgerError> {
            if *pos + n > bytes.len() {
                return Err(LedgerError::Format("truncated block".into()));
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let index = u64::from_be_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let prev_hash: [u8; 32] = take(&mut pos, 32)?.try_into().unwrap();
        let timestamp = u64::from_be_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let miner_len = u16::from_be_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
        let miner = take(&mut pos, miner_len)?.to_vec();
        let count = u32::from_be_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            entries.push(Entry::read_from(bytes, &mut pos, field)?);
        }
        let nonce = u64::from_be_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let hash: [u8; 32] = take(&mut pos, 32)?.try_into().unwrap();
        if pos != bytes.len() {
            return Err(LedgerError::Format("trailing bytes in block".into()));
        }
        Ok(Block { index, prev_hash, timestamp, miner, entries, nonce, hash })
    }
}

pub fn leading_zero_bits(hash: &[u8; 32]) -> u32 {
    let mut bits = 0;
    for byte in hash {
        if *byte == 0 {
            bits += 8;
        } else {
            bits += byte.leading_zeros();
            break;
        }
    }
    bits
}

#[derive(Debug, Clone)]
pub struct Ledger {
    field: Field,
    difficulty: u32,
    blocks: Vec<Block>,
    pending: Vec<Entry>,
}

impl Ledger {
    /// Creates a chain with a deterministically mined genesis block
    /// (timestamp 0, nonce search from 0).
    pub fn new(field: &Field, difficulty: u32) -> Ledger {
        let mut genesis = Block {
            index: 0,
            prev_hash: [0u8; 32],
            timestamp: 0,
            miner: b"genesis".to_vec(),
            entries: Vec::new(),
            nonce: 0,
            hash: [0u8; 32],
        };
        genesis.remine(difficulty);
        Ledger {
            field: field.clone(),
            difficulty,
            blocks: vec![genesis],
            pending: Vec::new(),
        }
    }

    pub fn difficulty(&self) -> u32 {
        self.difficulty
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Mutable access for tamper harnesses.
    #[doc(hidden)]
    pub fn blocks_mut(&mut self) -> &mut Vec<Block> {
        &mut self.blocks
    }

    pub fn pending(&self) -> &[Entry] {
        &self.pending
    }

    /// Queues an entry for the next block. A service record equal to one
    /// already pending or mined is refused.
    pub fn submit_entry(&mut self, entry: Entry) -> Result<(), LedgerError> {
        if matches!(entry, Entry::ServiceRecord { .. }) && self.record_present(&entry) {
            return Err(LedgerError::AlreadyServed);
        }
        self.pending.push(entry);
        Ok(())
    }

    /// True if an identical service record is pending or mined.
    pub fn record_present(&self, entry: &Entry) -> bool {
        self.pending.iter().chain(self.blocks.iter().flat_map(|b| &b.entries))
            .any(|e| e == entry)
    }

    /// True if the digest appears in a mined block.
    pub fn contains_digest(&self, dig: &FieldElement) -> bool {
        self.blocks
            .iter()
            .flat_map(|b| &b.entries)
            .any(|e| matches!(e, Entry::Digest(d) if d == dig))
    }

    /// True if the exact service record appears in a mined block.
    pub fn contains_record(&self, pk_server: &[u8], ind: u64, hr: &FieldElement) -> bool {
        self.blocks.iter().flat_map(|b| &b.entries).any(|e| {
            matches!(e, Entry::ServiceRecord { pk_server: p, ind: i, hr: h }
                if p == pk_server && *i == ind && h == hr)
        })
    }

    /// Packages all pending entries into a new block. The nonce search
    /// starts at a value drawn from `rng` and increments until the hash
    /// clears the difficulty.
    pub fn mine_block(&mut self, miner: &[u8], rng: &mut impl RngCore, now: u64) -> &Block {
        let prev = self.blocks.last().expect("chain always has genesis");
        let mut block = Block {
            index: prev.index + 1,
            prev_hash: prev.hash,
            timestamp: now,
            miner: miner.to_vec(),
            entries: std::mem::take(&mut self.pending),
            nonce: rng.next_u64(),
            hash: [0u8; 32],
        };
        block.remine(self.difficulty);
        self.blocks.push(block);
        self.blocks.last().unwrap()
    }

    /// Walks the chain and reports the first block that breaks an
    /// invariant: genesis shape, index sequence, hash linkage, content
    /// hash, or proof-of-work.
    pub fn validate_chain(&self) -> Result<(), ChainViolation> {
        for (i, block) in self.blocks.iter().enumerate() {
            let index = block.index;
            if index != i as u64 {
                return Err(ChainViolation { index: i as u64, kind: ViolationKind::BadIndex });
            }
            if i == 0 {
                if block.prev_hash != [0u8; 32] {
                    return Err(ChainViolation { index, kind: ViolationKind::BadGenesis });
                }
            } else if block.prev_hash != self.blocks[i - 1].hash {
                return Err(ChainViolation { index, kind: ViolationKind::BrokenLink });
            }
            if block.hash != block.compute_hash() {
                return Err(ChainViolation { index, kind: ViolationKind::HashMismatch });
            }
            if leading_zero_bits(&block.hash) < self.difficulty {
                return Err(ChainViolation { index, kind: ViolationKind::InsufficientWork });
            }
        }
        Ok(())
    }

    /// Appends blocks the file does not yet hold; never rewrites existing
    /// bytes. Creates the file (with header) on first use.
    pub fn sync_file(&self, path: &Path) -> Result<(), LedgerError> {
        let already = match std::fs::metadata(path) {
            Ok(_) => count_blocks_in_file(path, &self.field)?,
            Err(_) => {
                let mut f = std::fs::File::create(path)?;
                f.write_all(FILE_MAGIC)?;
                f.write_all(&[FILE_VERSION])?;
                f.write_all(&self.difficulty.to_be_bytes())?;
                0
            }
        };
        if already > self.blocks.len() {
            return Err(LedgerError::Format(
                "file holds more blocks than the live chain".into(),
            ));
        }
        let mut f = std::fs::OpenOptions::new().append(true).open(path)?;
        for block in &self.blocks[already..] {
            let bytes = block.to_bytes();
            f.write_all(&(bytes.len() as u32).to_be_bytes())?;
            f.write_all(&bytes)?;
        }
        Ok(())
    }

    /// Reads a chain back; the pending pool starts empty.
    pub fn load(path: &Path, field: &Field) -> Result<Ledger, LedgerError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 13 || &buf[..8] != FILE_MAGIC {
            return Err(LedgerError::Format("bad magic".into()));
        }
        if buf[8] != FILE_VERSION {
            return Err(LedgerError::Format("unsupported version".into()));
        }
        let difficulty = u32::from_be_bytes(buf[9..13].try_into().unwrap());
        let mut blocks = Vec::new();
        let mut pos = 13usize;
        while pos < buf.len() {
            if pos + 4 > buf.len() {
                return Err(LedgerError::Format("truncated frame".into()));
            }
            let len = u32::from_be_bytes(buf[pos..pos + 4].try_into().unwrap()) as usize;
            pos += 4;
            if pos + len > buf.len() {
                return Err(LedgerError::Format("truncated block frame".into()));
            }
            blocks.push(Block::from_bytes(&buf[pos..pos + len], field)?);
            pos += len;
        }
        if blocks.is_empty() {
            return Err(LedgerError::Format("file holds no blocks".into()));
        }
        Ok(Ledger { field: field.clone(), difficulty, blocks, pending: Vec::new() })
    }
}

fn count_blocks_in_file(path: &Path, _field: &Field) -> Result<usize, LedgerError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() < 13 || &buf[..8] != FILE_MAGIC {
        return Err(LedgerError::Format("bad magic".into()));
    }
    let mut count = 0usize;
    let mut pos = 13usize;
    while pos < buf.len() {
        if pos + 4 > buf.len() {
            return Err(LedgerError::Format("truncated frame".into()));
        }
        let len = u32::from_be_bytes(buf[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4 + len;
        if pos > buf.len() {
            return Err(LedgerError::Format("truncated block frame".into()));
        }
        count += 1;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::PairingEngine;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn field() -> Field {
        PairingEngine::oracle().scalar_field().clone()
    }

    #[test]
    fn leading_zero_bit_counts() {
        let mut h = [0xffu8; 32];
        assert_eq!(leading_zero_bits(&h), 0);
        h[0] = 0x00;
        assert_eq!(leading_zero_bits(&h), 8);
        h[1] = 0x0f;
        assert_eq!(leading_zero_bits(&h), 12);
        h[1] = 0x01;
        assert_eq!(leading_zero_bits(&h), 15);
        assert_eq!(leading_zero_bits(&[0u8; 32]), 256);
    }

    #[test]
    fn genesis_is_deterministic_and_valid() {
        let f = field();
        let a = Ledger::new(&f, 8);
        let b = Ledger::new(&f, 8);
        assert_eq!(a.blocks()[0], b.blocks()[0]);
        assert_eq!(a.blocks()[0].prev_hash, [0u8; 32]);
        assert!(leading_zero_bits(&a.blocks()[0].hash) >= 8);
        a.validate_chain().unwrap();
    }

    #[test]
    fn entries_confirm_only_after_mining() {
        let f = field();
        let mut ledger = Ledger::new(&f, 8);
        let dig = f.from_u64(777);
        ledger.submit_entry(Entry::Digest(dig.clone())).unwrap();
        assert!(!ledger.contains_digest(&dig));
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        ledger.mine_block(b"ap1", &mut rng, 100);
        assert!(ledger.contains_digest(&dig));
        assert!(ledger.pending().is_empty());
        ledger.validate_chain().unwrap();
        assert_eq!(ledger.blocks().len(), 2);
        assert_eq!(ledger.blocks()[1].timestamp, 100);
        assert_eq!(ledger.blocks()[1].miner, b"ap1");
    }

    #[test]
    fn duplicate_service_records_rejected() {
        let f = field();
        let mut ledger = Ledger::new(&f, 8);
        let rec = Entry::ServiceRecord {
            pk_server: vec![9, 9, 9],
            ind: 4,
            hr: f.from_u64(123),
        };
        ledger.submit_entry(rec.clone()).unwrap();
        // still pending: second submission already refused
        assert!(matches!(
            ledger.submit_entry(rec.clone()),
            Err(LedgerError::AlreadyServed)
        ));
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        ledger.mine_block(b"ap1", &mut rng, 5);
        assert!(ledger.contains_record(&[9, 9, 9], 4, &f.from_u64(123)));
        assert!(matches!(
            ledger.submit_entry(rec),
            Err(LedgerError::AlreadyServed)
        ));
        // a different record for the same server is fine
        ledger
            .submit_entry(Entry::ServiceRecord {
                pk_server: vec![9, 9, 9],
                ind: 5,
                hr: f.from_u64(123),
            })
            .unwrap();
        // plain digests may repeat
        ledger.submit_entry(Entry::Digest(f.from_u64(1))).unwrap();
        ledger.submit_entry(Entry::Digest(f.from_u64(1))).unwrap();
    }

    #[test]
    fn tampered_entry_detected_at_its_block() {
        let f = field();
        let mut ledger = Ledger::new(&f, 8);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for i in 0..4 {
            ledger.submit_entry(Entry::Digest(f.from_u64(i))).unwrap();
            ledger.mine_block(b"ap1", &mut rng, i);
        }
        ledger.validate_chain().unwrap();
        ledger.blocks_mut()[2].entries[0] = Entry::Digest(f.from_u64(999));
        let v = ledger.validate_chain().unwrap_err();
        assert_eq!(v, ChainViolation { index: 2, kind: ViolationKind::HashMismatch });
    }

    #[test]
    fn remined_block_breaks_the_next_link() {
        let f = field();
        let mut ledger = Ledger::new(&f, 8);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for i in 0..4 {
            ledger.submit_entry(Entry::Digest(f.from_u64(i))).unwrap();
            ledger.mine_block(b"ap1", &mut rng, i);
        }
        let difficulty = ledger.difficulty();
        ledger.blocks_mut()[2].entries[0] = Entry::Digest(f.from_u64(999));
        ledger.blocks_mut()[2].remine(difficulty);
        let v = ledger.validate_chain().unwrap_err();
        assert_eq!(v, ChainViolation { index: 3, kind: ViolationKind::BrokenLink });
    }

    #[test]
    fn garbage_nonce_fails_work_or_hash() {
        let f = field();
        let mut ledger = Ledger::new(&f, 8);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        ledger.submit_entry(Entry::Digest(f.from_u64(7))).unwrap();
        ledger.mine_block(b"ap1", &mut rng, 9);
        ledger.blocks_mut()[1].nonce ^= 1;
        let v = ledger.validate_chain().unwrap_err();
        assert_eq!(v.index, 1);
        assert_eq!(v.kind, ViolationKind::HashMismatch);
    }

    #[test]
    fn entry_and_block_bytes_round_trip() {
        let f = field();
        let entries = vec![
            Entry::Digest(f.from_u64(42)),
            Entry::ServiceRecord { pk_server: vec![1, 2, 3], ind: 9, hr: f.from_u64(55) },
        ];
        for e in &entries {
            let bytes = e.to_bytes();
            let mut pos = 0;
            let back = Entry::read_from(&bytes, &mut pos, &f).unwrap();
            assert_eq!(*e, back);
            assert_eq!(pos, bytes.len());
        }
        let mut ledger = Ledger::new(&f, 8);
        for e in entries {
            ledger.submit_entry(e).unwrap();
        }
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let block = ledger.mine_block(b"miner", &mut rng, 77).clone();
        let back = Block::from_bytes(&block.to_bytes(), &f).unwrap();
        assert_eq!(block, back);
    }

    #[test]
    fn digest_entry_layout_is_frozen() {
        let f = field();
        // tag byte 0x01 then the 8-byte big-endian element
        assert_eq!(
            Entry::Digest(f.from_u64(5)).to_bytes(),
            vec![0x01, 0, 0, 0, 0, 0, 0, 0, 5]
        );
    }

    #[test]
    fn file_sync_appends_and_reloads() {
        let f = field();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.bin");
        let mut ledger = Ledger::new(&f, 8);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        ledger.sync_file(&path).unwrap();
        let len_genesis = std::fs::metadata(&path).unwrap().len();
        ledger.submit_entry(Entry::Digest(f.from_u64(1))).unwrap();
        ledger.mine_block(b"ap1", &mut rng, 1);
        ledger.sync_file(&path).unwrap();
        let len_two = std::fs::metadata(&path).unwrap().len();
        assert!(len_two > len_genesis);
        // second sync with no new blocks appends nothing
        ledger.sync_file(&path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), len_two);
        let loaded = Ledger::load(&path, &f).unwrap();
        assert_eq!(loaded.blocks(), ledger.blocks());
        assert_eq!(loaded.difficulty(), 8);
        loaded.validate_chain().unwrap();
        assert!(loaded.contains_digest(&f.from_u64(1)));
    }

    #[test]
    fn same_seed_mines_identical_chains() {
        let f = field();
        let run = |seed: u64| {
            let mut ledger = Ledger::new(&f, 8);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for i in 0..3 {
                ledger.submit_entry(Entry::Digest(f.from_u64(i))).unwrap();
                ledger.mine_block(b"ap1", &mut rng, i);
            }
            ledger
                .blocks()
                .iter()
                .flat_map(|b| b.to_bytes())
                .collect::<Vec<u8>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn default_difficulty_mines_quickly_enough() {
        let f = field();
        let mut ledger = Ledger::new(&f, DEFAULT_DIFFICULTY);
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        ledger.submit_entry(Entry::Digest(f.from_u64(1))).unwrap();
        let block = ledger.mine_block(b"ap1", &mut rng, 1);
        assert!(leading_zero_bits(&block.hash) >= DEFAULT_DIFFICULTY);
        ledger.validate_chain().unwrap();
    }
}
