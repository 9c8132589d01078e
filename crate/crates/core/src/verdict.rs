use std::fmt;

/// Outcome of a checkable property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn pass(name: &str, detail: impl Into<String>) -> Self {
        Verdict { name: name.to_string(), passed: true, detail: detail.into() }
    }

    pub fn fail(name: &str, detail: impl Into<String>) -> Self {
        Verdict { name: name.to_string(), passed: false, detail: detail.into() }
    }

    pub fn check(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Verdict { name: name.to_string(), passed, detail: detail.into() }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "pass" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}
