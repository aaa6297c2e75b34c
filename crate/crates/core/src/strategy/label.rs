//! Strategy labels such as `eFA tn`, `bR+eLA tk` or `bR/eFB tk/n`.
//!
//! ```text
//! label      := base type [sub] [combine] dir [ws thresholds]
//! base       := 'e' | 'b'
//! type       := 'F' | 'M'          (element)   |  'S' | 'R'   (B-spline)
//! sub        := 'l' | 'u' | 'c'    (minimum span only)
//! combine    := '/' ['e'] 'F'      (switch to full span: eM.., bR..)
//!             | '+' 'e' 'L'        (element extension: bR..)
//! dir        := 'A' | 'B'
//! thresholds := 't' item (('+' | '/') item)*     item := 'd' | 'n' | 'k'
//! ```
//!
//! `+` joins parts used at the same iteration, `/` parts used one after the
//! other; thresholds after a `/` belong to the switched-to strategy.

use std::fmt;

use thiserror::Error;

pub const GRAMMAR: &str = "label := base type [sub] [combine] dir [thresholds]; \
base e|b; type F|M (e), S|R (b); sub l|u|c (M only); combine /F, /eF (switch) or +eL (R only); \
dir A|B; thresholds t followed by d|n|k joined with + or / (e.g. \"eFA tn\", \"bR/eFB tk/n\", \"bRA td+k\")";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid strategy label {label:?}: {reason} (grammar: {GRAMMAR})")]
pub struct LabelError {
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trigger {
    Element,
    BSpline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MinSpanCriterion {
    /// Largest overlapping B-spline (`l`).
    Largest,
    /// Highest share of unresolved points in the support (`u`).
    Unresolved,
    /// Equal-weight combination of the two (`c`).
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    FullSpan,
    MinSpan(MinSpanCriterion),
    Structured,
    Restricted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectionPolicy {
    Both,
    Alternating,
}

/// Which threshold types are active: distance (`td`), unresolved points per
/// element (`tn`), unresolved points per knot-interval strip (`tk`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ThresholdSet {
    pub td: bool,
    pub tn: bool,
    pub tk: bool,
}

impl ThresholdSet {
    pub fn is_empty(&self) -> bool {
        !(self.td || self.tn || self.tk)
    }

    fn suffix(&self) -> String {
        let items: Vec<&str> =
            [(self.td, "d"), (self.tn, "n"), (self.tk, "k")].iter().filter(|(on, _)| *on).map(|(_, c)| *c).collect();
        if items.is_empty() {
            String::new()
        } else {
            format!("t{}", items.join("+"))
        }
    }
}

/// A parsed refinement strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub label: String,
    pub trigger: Trigger,
    pub kind: StrategyKind,
    /// Element extension applied in the same iteration (`+eL`).
    pub extension: bool,
    pub direction: DirectionPolicy,
    pub thresholds: ThresholdSet,
    /// Full span strategy to switch to once progress stalls (`/F`, `/eF`).
    pub switch_to: Option<Box<StrategySpec>>,
}

impl StrategySpec {
    pub fn parse(label: &str) -> Result<Self, LabelError> {
        parse_label(label)
    }

    /// Label of this single phase, without the switch part.
    pub fn phase_label(&self) -> String {
        let mut s = String::new();
        s.push(match self.trigger {
            Trigger::Element => 'e',
            Trigger::BSpline => 'b',
        });
        match self.kind {
            StrategyKind::FullSpan => s.push('F'),
            StrategyKind::MinSpan(c) => {
                s.push('M');
                s.push(match c {
                    MinSpanCriterion::Largest => 'l',
                    MinSpanCriterion::Unresolved => 'u',
                    MinSpanCriterion::Combined => 'c',
                });
            }
            StrategyKind::Structured => s.push('S'),
            StrategyKind::Restricted => s.push('R'),
        }
        if self.extension {
            s.push_str("+eL");
        }
        s.push(match self.direction {
            DirectionPolicy::Both => 'B',
            DirectionPolicy::Alternating => 'A',
        });
        let t = self.thresholds.suffix();
        if !t.is_empty() {
            s.push(' ');
            s.push_str(&t);
        }
        s
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl std::str::FromStr for StrategySpec {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_label(s)
    }
}

pub fn parse_label(label: &str) -> Result<StrategySpec, LabelError> {
    let fail = |reason: &str| LabelError { label: label.to_string(), reason: reason.to_string() };
    let trimmed = label.trim();
    let (head, tail) = match trimmed.split_once(char::is_whitespace) {
        Some((h, t)) => (h, t.trim()),
        None => (trimmed, ""),
    };
    let mut chars = head.chars().peekable();

    let trigger = match chars.next() {
        Some('e') => Trigger::Element,
        Some('b') => Trigger::BSpline,
        _ => return Err(fail("expected trigger entity 'e' or 'b'")),
    };
    let kind = match (trigger, chars.next()) {
        (Trigger::Element, Some('F')) => StrategyKind::FullSpan,
        (Trigger::Element, Some('M')) => {
            let c = match chars.next() {
                Some('l') => MinSpanCriterion::Largest,
                Some('u') => MinSpanCriterion::Unresolved,
                Some('c') => MinSpanCriterion::Combined,
                _ => return Err(fail("minimum span needs a selection criterion l, u or c")),
            };
            StrategyKind::MinSpan(c)
        }
        (Trigger::BSpline, Some('S')) => StrategyKind::Structured,
        (Trigger::BSpline, Some('R')) => StrategyKind::Restricted,
        (Trigger::Element, _) => return Err(fail("element strategies are F or M")),
        (Trigger::BSpline, _) => return Err(fail("B-spline strategies are S or R")),
    };
    if matches!(chars.peek(), Some('l' | 'u' | 'c')) {
        return Err(fail("a selection criterion only applies to minimum span"));
    }

    let mut extension = false;
    let mut switches = false;
    match chars.peek() {
        Some('/') => {
            chars.next();
            if chars.peek() == Some(&'e') {
                chars.next();
            }
            if chars.next() != Some('F') {
                return Err(fail("only a switch to full span ('/F' or '/eF') is supported"));
            }
            if !matches!(kind, StrategyKind::MinSpan(_) | StrategyKind::Restricted) {
                return Err(fail("switching applies to minimum span and restricted mesh strategies"));
            }
            switches = true;
        }
        Some('+') => {
            chars.next();
            if chars.next() != Some('e') || chars.next() != Some('L') {
                return Err(fail("expected '+eL' for the element extension"));
            }
            if kind != StrategyKind::Restricted {
                return Err(fail("element extension applies to the restricted mesh strategy"));
            }
            extension = true;
        }
        _ => {}
    }

    let direction = match chars.next() {
        Some('A') => DirectionPolicy::Alternating,
        Some('B') => DirectionPolicy::Both,
        _ => return Err(fail("expected parameter direction 'A' or 'B'")),
    };
    if chars.next().is_some() {
        return Err(fail("unexpected characters after the direction"));
    }

    let (primary, secondary) = parse_thresholds(tail).map_err(|r| fail(&r))?;
    if secondary.is_some() && !switches {
        return Err(fail("'/' in thresholds requires a switching strategy"));
    }
    if primary.tk && kind != StrategyKind::Restricted {
        return Err(fail("tk applies to the restricted B-spline strategies only"));
    }
    if primary.tn && trigger == Trigger::BSpline && !extension {
        return Err(fail("tn applies to element based strategies"));
    }

    let switch_to = if switches {
        let mut t = secondary.unwrap_or(primary);
        if secondary.is_some() && t.tk {
            return Err(fail("tk does not apply to the full span strategy"));
        }
        t.tk = false;
        let mut full = StrategySpec {
            label: String::new(),
            trigger: Trigger::Element,
            kind: StrategyKind::FullSpan,
            extension: false,
            direction,
            thresholds: t,
            switch_to: None,
        };
        full.label = full.phase_label();
        Some(Box::new(full))
    } else {
        None
    };

    Ok(StrategySpec {
        label: if tail.is_empty() { head.to_string() } else { format!("{head} {tail}") },
        trigger,
        kind,
        extension,
        direction,
        thresholds: primary,
        switch_to,
    })
}

fn parse_thresholds(s: &str) -> Result<(ThresholdSet, Option<ThresholdSet>), String> {
    if s.is_empty() {
        return Ok((ThresholdSet::default(), None));
    }
    let body = s.strip_prefix('t').ok_or("thresholds start with 't'")?;
    let mut first = ThresholdSet::default();
    let mut second: Option<ThresholdSet> = None;
    let mut expect_item = true;
    for c in body.chars() {
        if expect_item {
            let set = second.as_mut().unwrap_or(&mut first);
            match c {
                'd' => set.td = true,
                'n' => set.tn = true,
                'k' => set.tk = true,
                _ => return Err(format!("unknown threshold type '{c}'")),
            }
            expect_item = false;
        } else {
            match c {
                '+' => {}
                '/' if second.is_none() => second = Some(ThresholdSet::default()),
                _ => return Err(format!("unexpected '{c}' in thresholds")),
            }
            expect_item = true;
        }
    }
    if expect_item {
        return Err("threshold list ends without a type".into());
    }
    Ok((first, second))
}
