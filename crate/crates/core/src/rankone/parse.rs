use super::{RankOneError, RankOneSpec, Result, Stage};

/// Parses one stage per line, `p: a_1 … a_p`. `#` starts a comment; a
/// comment before the first stage becomes the schedule's name.
pub fn parse_rank_one(text: &str) -> Result<RankOneSpec> {
    let mut stages = Vec::new();
    let mut name = None;
    for (lineno, raw) in text.lines().enumerate() {
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b.trim(), Some(c.trim())),
            None => (raw.trim(), None),
        };
        if body.is_empty() {
            if stages.is_empty() && name.is_none() {
                name = comment.filter(|c| !c.is_empty()).map(str::to_string);
            }
            continue;
        }
        let err = |message: String| RankOneError::Parse { line: lineno + 1, message };
        let (p, rest) = body.split_once(':').ok_or_else(|| err("expected `p: a_1 ... a_p`".into()))?;
        let p: u64 = p.trim().parse().map_err(|_| err(format!("bad cut count `{}`", p.trim())))?;
        let spacers = rest
            .split_whitespace()
            .map(|t| t.parse::<u64>().map_err(|_| err(format!("bad spacer count `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if spacers.len() as u64 != p {
            return Err(err(format!("{} spacer counts for p = {p}", spacers.len())));
        }
        stages.push(Stage { p, spacers });
    }
    RankOneSpec::new(stages, name)
}

#[cfg(test)]
mod tests {
    use super::super::{chacon_spec, historical_chacon_spec, staircase_spec};
    use super::*;

    #[test]
    fn round_trip() {
        for spec in [chacon_spec(4), staircase_spec(5, 3), historical_chacon_spec(2)] {
            assert_eq!(parse_rank_one(&spec.to_text()).unwrap(), spec);
        }
    }

    #[test]
    fn comments_and_errors() {
        let s = parse_rank_one("# mine\n\n3: 0 1 0  # chacon step\n2: 0 0\n").unwrap();
        assert_eq!(s.name.as_deref(), Some("mine"));
        assert_eq!(s.num_stages(), 2);
        assert!(matches!(parse_rank_one("3: 0 1\n"), Err(RankOneError::Parse { line: 1, .. })));
        assert!(matches!(parse_rank_one("2: 0 0\n2 0 0\n"), Err(RankOneError::Parse { line: 2, .. })));
        assert!(matches!(parse_rank_one("2: 0 -1\n"), Err(RankOneError::Parse { .. })));
        assert!(matches!(parse_rank_one("1: 0\n"), Err(RankOneError::InvalidSpec(_))));
        assert!(matches!(parse_rank_one(""), Err(RankOneError::InvalidSpec(_))));
    }
}
