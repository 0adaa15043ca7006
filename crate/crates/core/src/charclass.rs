//! The five-way partition of ASCII used by symbol layers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CharClass {
    Digit,
    Upper,
    Lower,
    Whitespace,
    PunctOther,
}

const PUNCT: &[u8] = b"!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

impl CharClass {
    pub const ALL: [CharClass; 5] =
        [CharClass::Digit, CharClass::Upper, CharClass::Lower, CharClass::Whitespace, CharClass::PunctOther];

    /// Class of an ASCII byte. Control characters other than tab land in
    /// `PunctOther`, they are just not listed among its members.
    pub fn of_byte(b: u8) -> CharClass {
        match b {
            b'0'..=b'9' => CharClass::Digit,
            b'A'..=b'Z' => CharClass::Upper,
            b'a'..=b'z' => CharClass::Lower,
            b' ' | b'\t' => CharClass::Whitespace,
            _ => CharClass::PunctOther,
        }
    }

    /// Lenient classification used when scoring arbitrary input: anything
    /// outside ASCII is treated as punctuation.
    pub fn of_char_lossy(c: char) -> CharClass {
        if c.is_ascii() {
            CharClass::of_byte(c as u8)
        } else {
            CharClass::PunctOther
        }
    }

    pub fn members(self) -> &'static [u8] {
        match self {
            CharClass::Digit => b"0123456789",
            CharClass::Upper => b"ABCDEFGHIJKLMNOPQRSTUVWXYZ",
            CharClass::Lower => b"abcdefghijklmnopqrstuvwxyz",
            CharClass::Whitespace => b" \t",
            CharClass::PunctOther => PUNCT,
        }
    }

    pub fn size(self) -> usize {
        self.members().len()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Escape used in the human-readable pattern.
    pub fn escape(self) -> &'static str {
        match self {
            CharClass::Digit => "\\d",
            CharClass::Upper => "\\u",
            CharClass::Lower => "\\l",
            CharClass::Whitespace => "\\s",
            CharClass::PunctOther => "\\p",
        }
    }

    pub fn tag(self) -> u8 {
        self as u8
    }
}

pub fn get_ascii_class(c: char) -> Result<CharClass> {
    if c.is_ascii() {
        Ok(CharClass::of_byte(c as u8))
    } else {
        Err(Error::NonAsciiInput(c))
    }
}
