//! Minimal line-directive template language used by the prompt assets.
//!
//! `@if flag`, `@if !flag`, `@else` and `@end` on their own lines select
//! blocks (they nest). `{name}` is replaced in a single pass, so
//! substituted text is never re-expanded. Unknown `{...}` is left alone.

use std::collections::{HashMap, HashSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("line {0}: `@else` or `@end` without `@if`")]
    Unbalanced(usize),
    #[error("unterminated `@if` block")]
    Unterminated,
    #[error("line {0}: unknown directive `{1}`")]
    Directive(usize, String),
}

pub(crate) fn render(
    template: &str,
    flags: &HashSet<&str>,
    vars: &HashMap<&str, String>,
) -> Result<String, TemplateError> {
    // Each frame: (parent active, this branch active).
    let mut stack: Vec<(bool, bool)> = Vec::new();
    let mut active = true;
    let mut kept: Vec<&str> = Vec::new();
    for (n, line) in template.lines().enumerate() {
        let lineno = n + 1;
        if let Some(directive) = line.strip_prefix('@') {
            let mut words = directive.split_whitespace();
            match (words.next(), words.next()) {
                (Some("if"), Some(cond)) => {
                    let (neg, name) = match cond.strip_prefix('!') {
                        Some(rest) => (true, rest),
                        None => (false, cond),
                    };
                    let holds = flags.contains(name) != neg;
                    stack.push((active, holds));
                    active = active && holds;
                }
                (Some("else"), None) => {
                    let frame = stack.last_mut().ok_or(TemplateError::Unbalanced(lineno))?;
                    frame.1 = !frame.1;
                    active = frame.0 && frame.1;
                }
                (Some("end"), None) => {
                    let (parent, _) = stack.pop().ok_or(TemplateError::Unbalanced(lineno))?;
                    active = parent;
                }
                _ => return Err(TemplateError::Directive(lineno, line.to_string())),
            }
            continue;
        }
        if active {
            kept.push(line);
        }
    }
    if !stack.is_empty() {
        return Err(TemplateError::Unterminated);
    }
    let mut body = kept.join("\n");
    body.push('\n');
    Ok(substitute(&body, vars))
}

fn substitute(text: &str, vars: &HashMap<&str, String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let name = &after[..close];
            vars.get(name).map(|value| (value, close))
        });
        match hit {
            Some((value, close)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
