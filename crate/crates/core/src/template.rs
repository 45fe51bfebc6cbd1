//! Minimal `{placeholder}` substitution for prompt templates.
//!
//! A placeholder is `{name}` with `name` made of lowercase ASCII letters and
//! underscores. `{{` and `}}` produce literal braces. Any other brace is copied
//! through unchanged, so text such as `{jig, dorian}` needs no escaping.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template uses unknown placeholder {{{0}}}")]
    Unresolved(String),
    #[error("template lacks required placeholder {{{0}}}")]
    Missing(String),
}

fn placeholder_at(s: &str) -> Option<&str> {
    let rest = s.strip_prefix('{')?;
    let end = rest.find('}')?;
    let name = &rest[..end];
    (!name.is_empty() && name.chars().all(|c| c.is_ascii_lowercase() || c == '_')).then_some(name)
}

/// Names of the placeholders in `template`, in order of appearance.
pub fn placeholders(template: &str) -> Vec<&str> {
    let mut names = Vec::new();
    let mut i = 0;
    while i < template.len() {
        let rest = &template[i..];
        if rest.starts_with("{{") || rest.starts_with("}}") {
            i += 2;
        } else if let Some(name) = placeholder_at(rest) {
            names.push(name);
            i += name.len() + 2;
        } else {
            i += rest.chars().next().map_or(1, char::len_utf8);
        }
    }
    names
}

/// Checks that every placeholder is known and every required one is used.
pub fn check(template: &str, known: &[&str], required: &[&str]) -> Result<(), TemplateError> {
    let used = placeholders(template);
    if let Some(bad) = used.iter().find(|n| !known.contains(n)) {
        return Err(TemplateError::Unresolved(bad.to_string()));
    }
    if let Some(missing) = required.iter().find(|r| !used.contains(r)) {
        return Err(TemplateError::Missing(missing.to_string()));
    }
    Ok(())
}

/// Substitutes `values` in a single pass; inserted text is never rescanned.
pub fn render(template: &str, values: &[(&str, &str)]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    let mut i = 0;
    while i < template.len() {
        let rest = &template[i..];
        if rest.starts_with("{{") {
            out.push('{');
            i += 2;
        } else if rest.starts_with("}}") {
            out.push('}');
            i += 2;
        } else if let Some(name) = placeholder_at(rest) {
            let value = values
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| TemplateError::Unresolved(name.to_string()))?;
            out.push_str(value);
            i += name.len() + 2;
        } else {
            let c = rest.chars().next().expect("non-empty");
            out.push(c);
            i += c.len_utf8();
        }
    }
    Ok(out)
}
