//! Text normalisation shared by every feature that looks at words.
//!
//! Texts are lower-cased, URLs become [`URL_TAG`], Reddit quote lines (starting with `>`)
//! become [`QUOTE_TAG`], and punctuation is removed except for separators inside numbers
//! (`3,5`) and the final period of abbreviations (`mio.`, `f.eks.`).

use std::sync::LazyLock;

use regex::Regex;

pub const URL_TAG: &str = "urlurlurl";
pub const QUOTE_TAG: &str = "refrefref";

pub(crate) static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)[^\s]+").unwrap());

/// Characters that always end a token.
const SEPARATORS: &[char] = &[
    '?', '!', ';', '"', '(', ')', '[', ']', '{', '}', '*', '“', '”', '„', '«', '»', '…', '|',
];

/// Common Danish (and a few English) abbreviations that keep their trailing period.
const ABBREVIATIONS: &[&str] = &[
    "mio", "mia", "mill", "ca", "kr", "osv", "nr", "pga", "mht", "evt", "dvs", "jf", "fx",
    "stk", "tlf", "vedr", "iflg", "ifm", "inkl", "ekskl", "hhv", "mv", "etc", "prof", "bl",
    "ang", "adr", "afd", "alm", "bla", "ex", "mr", "mrs", "ms", "st", "vs", "aka", "incl",
];

pub fn is_quote_line(line: &str) -> bool {
    line.trim_start().starts_with('>')
}

/// Tokenise a raw post text. Empty input gives an empty token list.
pub fn preprocess(raw: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for line in raw.lines() {
        if is_quote_line(line) {
            tokens.push(QUOTE_TAG.to_string());
            continue;
        }
        let lower = line.to_lowercase();
        let replaced = URL_RE.replace_all(&lower, " urlurlurl ");
        for chunk in replaced.split(|c: char| c.is_whitespace() || SEPARATORS.contains(&c)) {
            split_commas(chunk, &mut tokens);
        }
    }
    tokens
}

/// Commas split a chunk unless they sit between two digits.
fn split_commas(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut start = 0;
    for i in 0..chars.len() {
        if chars[i] == ',' {
            let numeric = i > 0
                && i + 1 < chars.len()
                && chars[i - 1].is_ascii_digit()
                && chars[i + 1].is_ascii_digit();
            if !numeric {
                push_clean(&chars[start..i], out);
                start = i + 1;
            }
        }
    }
    push_clean(&chars[start..], out);
}

fn push_clean(chars: &[char], out: &mut Vec<String>) {
    let is_word = |c: &char| c.is_alphanumeric();
    let Some(first) = chars.iter().position(is_word) else {
        return;
    };
    let last = chars.iter().rposition(is_word).unwrap();
    let mut token: String = chars[first..=last].iter().collect();
    let trailing = &chars[last + 1..];
    if trailing.first() == Some(&'.')
        && trailing.get(1) != Some(&'.')
        && is_abbreviation(&token)
    {
        token.push('.');
    }
    out.push(token);
}

fn is_abbreviation(stem: &str) -> bool {
    let mut chars = stem.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => c.is_alphabetic(),
        _ => stem.contains('.') || ABBREVIATIONS.contains(&stem),
    }
}
