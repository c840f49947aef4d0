use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// Pinned `name==version` lines from `<root>/requirements.txt`. A missing
/// file yields an empty map.
pub fn third_party_versions(root: &Path) -> BTreeMap<String, String> {
    match fs::read_to_string(root.join("requirements.txt")) {
        Ok(text) => parse_requirements(&text),
        Err(_) => BTreeMap::new(),
    }
}

/// Parse requirement lines; only exact pins (`==`) are kept.
pub fn parse_requirements(text: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        let Some((name, version)) = line.split_once("==") else { continue };
        // `name[extra]==1.0 ; python_version < "3.9"`
        let name = name.split('[').next().unwrap_or("").trim();
        let version = version.split(';').next().unwrap_or("").trim();
        if name.is_empty() || version.is_empty() || version.starts_with('=') {
            continue;
        }
        if !name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) {
            continue;
        }
        out.insert(name.to_string(), version.to_string());
    }
    out
}

/// Lowercase with `-`, `_`, `.` treated as equivalent.
pub fn normalize_package_name(name: &str) -> String {
    name.to_ascii_lowercase().replace(['-', '.'], "_")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_lines_only() {
        let m = parse_requirements("numpy>=1.20\nrequests==2.31.0\n");
        assert_eq!(m.len(), 1);
        assert_eq!(m["requests"], "2.31.0");
    }

    #[test]
    fn single_pin() {
        assert_eq!(parse_requirements("requests==2.31.0")["requests"], "2.31.0");
    }

    #[test]
    fn comments_extras_and_markers() {
        let m = parse_requirements(
            "# deps\nuvicorn[standard]==0.23.2  # server\nfoo==1.0; python_version<'3.9'\n-r other.txt\n",
        );
        assert_eq!(m["uvicorn"], "0.23.2");
        assert_eq!(m["foo"], "1.0");
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn missing_file_is_empty() {
        let dir = std::env::temp_dir().join("crossfile-no-such-dir-for-reqs");
        assert!(third_party_versions(&dir).is_empty());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_package_name("Py-YAML.ext"), "py_yaml_ext");
    }
}
