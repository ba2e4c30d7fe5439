use super::{Letter, Result, Substitution, SubstitutionError};

/// Parses one rule per line, `i -> w`, where `w` is either a run of digits
/// (`0 -> 02`) or whitespace-separated letter indices (`0 -> 0 11`).
/// Blank lines and `#` comments are ignored. Rules must list letters
/// `0, 1, …, k-1` in order.
pub fn parse_substitution(text: &str) -> Result<Substitution> {
    let mut images: Vec<Vec<Letter>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| SubstitutionError::Parse { line: lineno + 1, message };
        let (lhs, rhs) = line.split_once("->").ok_or_else(|| err("expected `i -> w`".into()))?;
        let letter: Letter = lhs.trim().parse().map_err(|_| err(format!("bad letter `{}`", lhs.trim())))?;
        if letter != images.len() {
            return Err(err(format!("expected rule for letter {}, found {letter}", images.len())));
        }
        let rhs = rhs.trim();
        let word = if rhs.contains(char::is_whitespace) {
            rhs.split_whitespace()
                .map(|t| t.parse::<Letter>().map_err(|_| err(format!("bad letter `{t}`"))))
                .collect::<Result<Vec<_>>>()?
        } else {
            rhs.chars()
                .map(|c| c.to_digit(10).map(|d| d as Letter).ok_or_else(|| err(format!("bad digit `{c}`"))))
                .collect::<Result<Vec<_>>>()?
        };
        images.push(word);
    }
    Substitution::new(images)
}
