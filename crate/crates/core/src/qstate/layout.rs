use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Owner of a register. `Environment` registers model leaked (inaccessible)
/// systems; `Reference` registers purify probe inputs during verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
    Environment,
    Reference,
}

/// A named block of qubits with an owner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub party: Party,
    pub width: usize,
}

/// Ordered register layout. Amplitude indices concatenate register bits in
/// layout order, most significant register first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for r in &registers {
            if r.width == 0 {
                return Err(Error::InvalidProtocol(format!(
                    "register `{}` has zero width",
                    r.name
                )));
            }
            if !seen.insert(r.name.clone()) {
                return Err(Error::DuplicateRegister(r.name.clone()));
            }
        }
        Ok(Self { registers })
    }

    /// Convenience constructor from `(name, party, width)` triples.
    pub fn of(regs: &[(&str, Party, usize)]) -> Result<Self> {
        Self::new(
            regs.iter()
                .map(|&(name, party, width)| Register {
                    name: name.to_string(),
                    party,
                    width,
                })
                .collect(),
        )
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total_width(&self) -> usize {
        self.registers.iter().map(|r| r.width).sum()
    }

    pub fn dimension(&self) -> usize {
        1usize << self.total_width()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn register(&self, name: &str) -> Result<&Register> {
        Ok(&self.registers[self.index_of(name)?])
    }

    /// Bit offset of a register from the most significant end.
    pub fn offset_of(&self, name: &str) -> Result<usize> {
        let idx = self.index_of(name)?;
        Ok(self.registers[..idx].iter().map(|r| r.width).sum())
    }

    /// Shift amounts (from the least significant bit) for each bit of the
    /// named registers, in register order, most significant bit first.
    pub fn bit_shifts(&self, names: &[&str]) -> Result<Vec<usize>> {
        let w = self.total_width();
        let mut shifts = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for name in names {
            if !seen.insert(*name) {
                return Err(Error::DuplicateRegister(name.to_string()));
            }
            let reg = self.register(name)?;
            let offset = self.offset_of(name)?;
            for b in 0..reg.width {
                shifts.push(w - 1 - (offset + b));
            }
        }
        Ok(shifts)
    }

    /// Value held by the named register within a global amplitude index.
    pub fn extract(&self, name: &str, index: usize) -> Result<usize> {
        let reg = self.register(name)?;
        let offset = self.offset_of(name)?;
        let shift = self.total_width() - offset - reg.width;
        Ok((index >> shift) & ((1usize << reg.width) - 1))
    }

    /// Registers owned by any of the given parties.
    pub fn names_of_parties(&self, parties: &[Party]) -> Vec<&str> {
        self.registers
            .iter()
            .filter(|r| parties.contains(&r.party))
            .map(|r| r.name.as_str())
            .collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }
}

/// Pack per-register values into a global index, where `values` pairs
/// register names with their contents.
pub fn pack_index(layout: &RegisterLayout, values: &[(&str, usize)]) -> Result<usize> {
    let w = layout.total_width();
    let mut idx = 0usize;
    for (name, value) in values {
        let reg = layout.register(name)?;
        if *value >= (1usize << reg.width) {
            return Err(Error::WidthMismatch {
                name: name.to_string(),
                width: reg.width,
                got: usize::BITS as usize - value.leading_zeros() as usize,
            });
        }
        let offset = layout.offset_of(name)?;
        idx |= value << (w - offset - reg.width);
    }
    Ok(idx)
}

/// Parse a bitstring like "01" into its integer value, checking the width.
pub fn parse_bits(name: &str, width: usize, bits: &str) -> Result<usize> {
    if bits.len() != width {
        return Err(Error::WidthMismatch {
            name: name.to_string(),
            width,
            got: bits.len(),
        });
    }
    let mut v = 0usize;
    for c in bits.chars() {
        v <<= 1;
        match c {
            '0' => {}
            '1' => v |= 1,
            _ => {
                return Err(Error::OutOfRange(format!(
                    "bitstring `{bits}` contains non-binary character"
                )))
            }
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_and_extract() {
        let l = RegisterLayout::of(&[
            ("A1", Party::Alice, 2),
            ("B1", Party::Bob, 1),
            ("B2", Party::Bob, 3),
        ])
        .unwrap();
        assert_eq!(l.total_width(), 6);
        assert_eq!(l.offset_of("A1").unwrap(), 0);
        assert_eq!(l.offset_of("B1").unwrap(), 2);
        assert_eq!(l.offset_of("B2").unwrap(), 3);
        // index = A1 bits | B1 bit | B2 bits
        let idx = pack_index(&l, &[("A1", 0b10), ("B1", 0b1), ("B2", 0b011)]).unwrap();
        #[allow(clippy::unusual_byte_groupings)]
        let expected = 0b10_1_011; // grouped by register
        assert_eq!(idx, expected);
        assert_eq!(l.extract("A1", idx).unwrap(), 0b10);
        assert_eq!(l.extract("B1", idx).unwrap(), 1);
        assert_eq!(l.extract("B2", idx).unwrap(), 0b011);
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(RegisterLayout::of(&[("A", Party::Alice, 1), ("A", Party::Bob, 1)]).is_err());
    }

    #[test]
    fn bitstring_parsing() {
        assert_eq!(parse_bits("A", 2, "10").unwrap(), 2);
        assert!(parse_bits("A", 1, "01").is_err());
        assert!(parse_bits("A", 2, "2x").is_err());
    }
}
