//! Terminal prompts for an agent played by a person.

use std::io::{BufRead, Write};

use cake_core::exec::{Action, DecisionContext, DecisionKind};
use cake_core::{Fraction, Interval};

/// Input ran out before a decision was entered.
#[derive(Debug)]
pub struct EndOfInput;

pub struct Prompter<R, W> {
    input: R,
    output: W,
}

/// `p/q`, an integer, or a finite decimal such as `0.375`, all exact.
pub fn parse_position(s: &str) -> Option<Fraction> {
    let s = s.trim();
    if let Ok(f) = s.parse::<Fraction>() {
        return Some(f);
    }
    let (whole, digits) = s.split_once('.')?;
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let scale = format!("1{}", "0".repeat(digits.len()));
    let whole = if whole.is_empty() { "0" } else { whole };
    let whole: Fraction = whole.parse().ok()?;
    let frac: Fraction = format!("{digits}/{scale}").parse().ok()?;
    Some(if s.starts_with('-') {
        whole - frac
    } else {
        whole + frac
    })
}

fn show(iv: &Interval) -> String {
    format!(
        "[{}, {}]",
        iv.lo.display_with_decimal(),
        iv.hi.display_with_decimal()
    )
}

impl<R: BufRead, W: Write> Prompter<R, W> {
    pub fn new(input: R, output: W) -> Self {
        Prompter { input, output }
    }

    fn line(&mut self) -> Result<String, EndOfInput> {
        let mut s = String::new();
        match self.input.read_line(&mut s) {
            Ok(0) | Err(_) => Err(EndOfInput),
            Ok(_) => Ok(s.trim().to_string()),
        }
    }

    fn say(&mut self, text: &str) {
        let _ = writeln!(self.output, "{text}");
    }

    fn describe(&mut self, ctx: &DecisionContext<'_>) {
        self.say(&format!("agent {} at node {}", ctx.agent(), ctx.node()));
        self.say("current pieces (your value):");
        for (k, iv) in ctx.partition().iter().enumerate() {
            let v = ctx.value(iv).display_with_decimal();
            self.say(&format!("  {}: {} {v}", k + 1, show(iv)));
        }
    }

    /// Asks until a legal action is entered.
    pub fn ask(&mut self, ctx: &DecisionContext<'_>) -> Result<Action, EndOfInput> {
        self.describe(ctx);
        match ctx.kind().clone() {
            DecisionKind::Cut { options } => {
                self.say("cut options:");
                for (k, iv) in options.iter().enumerate() {
                    self.say(&format!("  {}: {}", k + 1, show(iv)));
                }
                let many = options.len() > 1;
                loop {
                    let _ = write!(
                        self.output,
                        "{}> ",
                        if many {
                            "option and position"
                        } else {
                            "position"
                        }
                    );
                    let _ = self.output.flush();
                    let line = self.line()?;
                    match self.read_cut(&line, &options) {
                        Ok(a) => return Ok(a),
                        Err(why) => self.say(&why),
                    }
                }
            }
            DecisionKind::Branch { count } => self
                .pick_index(count, "branch")
                .map(|child| Action::Branch { child }),
            DecisionKind::Pick { options } => {
                self.say("pieces on offer:");
                for (k, iv) in options.iter().enumerate() {
                    let v = ctx.value(iv).display_with_decimal();
                    self.say(&format!("  {}: {} {v}", k + 1, show(iv)));
                }
                self.pick_index(options.len(), "piece")
                    .map(|piece| Action::Pick { piece })
            }
        }
    }

    fn read_cut(&self, line: &str, options: &[Interval]) -> Result<Action, String> {
        let words: Vec<&str> = line.split_whitespace().collect();
        let (piece, at) = match words.as_slice() {
            [at] if options.len() == 1 => (0, *at),
            [k, at] => match k.parse::<usize>() {
                Ok(k) if (1..=options.len()).contains(&k) => (k - 1, *at),
                _ => return Err(format!("option must be 1..={}", options.len())),
            },
            _ if options.len() == 1 => return Err("enter one position".into()),
            _ => return Err("enter an option number and a position".into()),
        };
        let at = parse_position(at).ok_or_else(|| format!("`{at}` is not a number"))?;
        let iv = &options[piece];
        if !iv.contains(&at) {
            return Err(format!("{at} lies outside {}", show(iv)));
        }
        Ok(Action::Cut { piece, at })
    }

    fn pick_index(&mut self, count: usize, what: &str) -> Result<usize, EndOfInput> {
        loop {
            let _ = write!(self.output, "{what} (1-{count})> ");
            let _ = self.output.flush();
            let line = self.line()?;
            match line.parse::<usize>() {
                Ok(k) if (1..=count).contains(&k) => return Ok(k - 1),
                _ => self.say(&format!("enter a number from 1 to {count}")),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cake_core::frac;

    #[test]
    fn positions_parse_exactly() {
        assert_eq!(parse_position("1/3"), Some(frac(1, 3)));
        assert_eq!(parse_position("0.375"), Some(frac(3, 8)));
        assert_eq!(parse_position(".5"), Some(frac(1, 2)));
        assert_eq!(parse_position("1"), Some(frac(1, 1)));
        assert_eq!(parse_position("half"), None);
        assert_eq!(parse_position("0."), None);
    }
}
