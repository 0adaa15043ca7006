//! Synthetic column generators with optional syntactic corruption.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SynthKind {
    Zip,
    DateYmd,
    Ipv4,
    ChemblId,
    Phone,
    MixedNaId,
    CurrencyCode,
    TimeHhmm,
    ProductId,
    Title,
    LatinWord,
}

impl SynthKind {
    pub const ALL: [SynthKind; 11] = [
        SynthKind::Zip,
        SynthKind::DateYmd,
        SynthKind::Ipv4,
        SynthKind::ChemblId,
        SynthKind::Phone,
        SynthKind::MixedNaId,
        SynthKind::CurrencyCode,
        SynthKind::TimeHhmm,
        SynthKind::ProductId,
        SynthKind::Title,
        SynthKind::LatinWord,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Zip => "ZIP",
            SynthKind::DateYmd => "DATE_YMD",
            SynthKind::Ipv4 => "IPV4",
            SynthKind::ChemblId => "CHEMBL_ID",
            SynthKind::Phone => "PHONE",
            SynthKind::MixedNaId => "MIXED_NA_ID",
            SynthKind::CurrencyCode => "CURRENCY_CODE",
            SynthKind::TimeHhmm => "TIME_HHMM",
            SynthKind::ProductId => "PRODUCT_ID",
            SynthKind::Title => "TITLE",
            SynthKind::LatinWord => "LATIN_WORD",
        }
    }

    pub fn value<R: Rng + ?Sized>(self, rng: &mut R) -> String {
        match self {
            SynthKind::Zip => format!("{:05}", rng.gen_range(0..100_000)),
            SynthKind::DateYmd => {
                let year = rng.gen_range(1990..=2024);
                let month = rng.gen_range(1..=12);
                let day = rng.gen_range(1..=days_in_month(year, month));
                format!("{year:04}-{month:02}-{day:02}")
            }
            SynthKind::Ipv4 => {
                let o: [u8; 4] = rng.gen();
                format!("{}.{}.{}.{}", o[0], o[1], o[2], o[3])
            }
            SynthKind::ChemblId => format!("CHEMBL{}", rng.gen_range(1..=2_500_000)),
            SynthKind::Phone => format!(
                "({}{:02}) {:03}-{:04}",
                rng.gen_range(2..=9),
                rng.gen_range(0..100),
                rng.gen_range(200..1000),
                rng.gen_range(0..10_000)
            ),
            SynthKind::MixedNaId => {
                if rng.gen_bool(0.2) {
                    "N/A".to_string()
                } else {
                    format!("{:010}", rng.gen_range(0..10_000_000_000u64))
                }
            }
            SynthKind::CurrencyCode => pick(rng, CURRENCIES).to_string(),
            SynthKind::TimeHhmm => format!("{:02}:{:02}", rng.gen_range(0..24), rng.gen_range(0..60)),
            SynthKind::ProductId => {
                let mut s = String::with_capacity(10);
                for _ in 0..3 {
                    s.push(rng.gen_range(b'A'..=b'Z') as char);
                }
                s.push('-');
                s.push_str(&format!("{:05}", rng.gen_range(0..100_000)));
                s
            }
            SynthKind::Title => {
                let r: f64 = rng.gen();
                let mut acc = 0.0;
                for (t, w) in TITLES {
                    acc += w;
                    if r < acc {
                        return t.to_string();
                    }
                }
                TITLES[TITLES.len() - 1].0.to_string()
            }
            SynthKind::LatinWord => pick(rng, LATIN).to_string(),
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        SynthKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown synthetic kind {s:?}")))
    }
}

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        2 if (year.is_multiple_of(4) && !year.is_multiple_of(100)) || year.is_multiple_of(400) => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

const CURRENCIES: &[&str] = &[
    "USD", "EUR", "JPY", "GBP", "AUD", "CAD", "CHF", "CNY", "HKD", "NZD", "SEK", "KRW", "SGD", "NOK", "MXN", "INR",
    "RUB", "ZAR", "TRY", "BRL", "TWD", "DKK", "PLN", "THB", "IDR", "HUF", "CZK", "ILS", "CLP", "PHP", "AED", "COP",
    "SAR", "MYR", "RON", "ARS", "EGP", "NGN", "PKR", "VND",
];

const TITLES: &[(&str, f64)] =
    &[("Mr.", 0.38), ("Ms.", 0.22), ("Mrs.", 0.18), ("Dr.", 0.12), ("Prof.", 0.06), ("Rev.", 0.04)];

const LATIN: &[&str] = &[
    "lorem",
    "ipsum",
    "dolor",
    "sit",
    "amet",
    "consectetur",
    "adipiscing",
    "elit",
    "sed",
    "do",
    "eiusmod",
    "tempor",
    "incididunt",
    "ut",
    "labore",
    "et",
    "dolore",
    "magna",
    "aliqua",
    "enim",
    "ad",
    "minim",
    "veniam",
    "quis",
    "nostrud",
    "exercitation",
    "ullamco",
    "laboris",
    "nisi",
    "aliquip",
    "ex",
    "ea",
    "commodo",
    "consequat",
    "duis",
    "aute",
    "irure",
    "in",
    "reprehenderit",
    "voluptate",
    "velit",
    "esse",
    "cillum",
    "fugiat",
    "nulla",
    "pariatur",
    "excepteur",
    "sint",
    "occaecat",
    "cupidatat",
    "non",
    "proident",
    "sunt",
    "culpa",
    "qui",
    "officia",
    "deserunt",
    "mollit",
    "anim",
    "id",
    "est",
    "laborum",
    "cupiditate",
];

const SWAP_DELIMITERS: &[u8] = b"-/.:_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    LengthChange,
    ClassFlip,
    DelimiterSwap,
}

fn is_swap_delimiter(b: u8) -> bool {
    SWAP_DELIMITERS.contains(&b) || b == b' '
}

/// Apply one syntactic corruption. The result always differs from `value`.
pub fn corrupt<R: Rng + ?Sized>(value: &str, kind: Corruption, rng: &mut R) -> String {
    let mut bytes = value.as_bytes().to_vec();
    let body: Vec<usize> = (0..bytes.len()).filter(|&i| !is_swap_delimiter(bytes[i])).collect();
    match kind {
        Corruption::LengthChange => {
            let at = body[rng.gen_range(0..body.len())];
            if bytes.len() > 1 && rng.gen_bool(0.5) {
                bytes.remove(at);
            } else {
                let b = bytes[at];
                bytes.insert(at, b);
            }
        }
        Corruption::ClassFlip => {
            let at = body[rng.gen_range(0..body.len())];
            bytes[at] = match bytes[at] {
                b'0'..=b'9' => rng.gen_range(b'A'..=b'Z'),
                b'A'..=b'Z' | b'a'..=b'z' => rng.gen_range(b'0'..=b'9'),
                _ => rng.gen_range(b'a'..=b'z'),
            };
        }
        Corruption::DelimiterSwap => {
            let delims: Vec<usize> = (0..bytes.len()).filter(|&i| is_swap_delimiter(bytes[i])).collect();
            if delims.is_empty() {
                let at = rng.gen_range(1..bytes.len().max(2));
                let d = SWAP_DELIMITERS[rng.gen_range(0..SWAP_DELIMITERS.len())];
                bytes.insert(at.min(bytes.len()), d);
            } else {
                let at = delims[rng.gen_range(0..delims.len())];
                let choices: Vec<u8> = SWAP_DELIMITERS.iter().copied().filter(|&d| d != bytes[at]).collect();
                bytes[at] = choices[rng.gen_range(0..choices.len())];
            }
        }
    }
    String::from_utf8(bytes).expect("ascii in, ascii out")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthColumn {
    pub values: Vec<String>,
    /// true where the value was corrupted.
    pub ground_truth: Vec<bool>,
}

/// `n` values of `kind`; `round(n * corrupt_fraction)` of them corrupted.
pub fn synth_generate(kind: SynthKind, n: usize, corrupt_fraction: f64, seed: u64) -> Result<SynthColumn, Error> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&corrupt_fraction) {
        return Err(Error::InvalidParameter("corrupt_fraction must lie in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<String> = (0..n).map(|_| kind.value(&mut rng)).collect();
    let mut ground_truth = vec![false; n];
    let k = (n as f64 * corrupt_fraction).round() as usize;
    for idx in sample(&mut rng, n, k).into_iter() {
        let c = match rng.gen_range(0..3) {
            0 => Corruption::LengthChange,
            1 => Corruption::ClassFlip,
            _ => Corruption::DelimiterSwap,
        };
        values[idx] = corrupt(&values[idx], c, &mut rng);
        ground_truth[idx] = true;
    }
    Ok(SynthColumn { values, ground_truth })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zip_values_are_five_digits() {
        let col = synth_generate(SynthKind::Zip, 100, 0.0, 7).unwrap();
        assert_eq!(col.values.len(), 100);
        assert!(col.values.iter().all(|v| v.len() == 5 && v.bytes().all(|b| b.is_ascii_digit())));
        assert!(col.ground_truth.iter().all(|t| !t));
    }

    #[test]
    fn corruption_count_is_rounded_fraction() {
        let col = synth_generate(SynthKind::DateYmd, 1000, 0.01, 3).unwrap();
        assert_eq!(col.ground_truth.iter().filter(|t| **t).count(), 10);
        let clean = synth_generate(SynthKind::DateYmd, 1000, 0.0, 3).unwrap();
        for (i, flagged) in col.ground_truth.iter().enumerate() {
            if *flagged {
                assert_ne!(col.values[i], clean.values[i]);
            }
        }
    }

    #[test]
    fn mixed_na_has_both_shapes() {
        let col = synth_generate(SynthKind::MixedNaId, 500, 0.0, 11).unwrap();
        assert!(col.values.iter().any(|v| v == "N/A"));
        assert!(col.values.iter().any(|v| v.len() == 10));
        assert!(col.values.iter().all(|v| v == "N/A" || v.len() == 10));
    }

    #[test]
    fn deterministic_per_seed() {
        for kind in SynthKind::ALL {
            let a = synth_generate(kind, 50, 0.1, 42).unwrap();
            let b = synth_generate(kind, 50, 0.1, 42).unwrap();
            assert_eq!(a, b, "{kind}");
        }
        assert_ne!(
            synth_generate(SynthKind::Ipv4, 50, 0.0, 1).unwrap(),
            synth_generate(SynthKind::Ipv4, 50, 0.0, 2).unwrap()
        );
    }

    #[test]
    fn corruptions_always_change_the_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for kind in SynthKind::ALL {
            for _ in 0..200 {
                let v = kind.value(&mut rng);
                for c in [Corruption::LengthChange, Corruption::ClassFlip, Corruption::DelimiterSwap] {
                    assert_ne!(corrupt(&v, c, &mut rng), v, "{kind} {c:?}");
                }
            }
        }
    }

    #[test]
    fn kind_names_parse() {
        for kind in SynthKind::ALL {
            assert_eq!(kind.name().parse::<SynthKind>().unwrap(), kind);
        }
        assert_eq!("date-ymd".parse::<SynthKind>().unwrap(), SynthKind::DateYmd);
        assert!("nope".parse::<SynthKind>().is_err());
        assert!(synth_generate(SynthKind::Zip, 0, 0.0, 1).is_err());
        assert!(synth_generate(SynthKind::Zip, 1, 1.0, 1).is_err());
    }
}
