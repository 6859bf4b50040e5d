//! Writing, reading and validating family JSON files.

use asymspec::family::FamilySpec;
use asymspec::fixtures::commuting_nilpotent_pair;
use asymspec::report::to_json_string;
use asymspec::schema::{family_from_str, family_to_json, load_family, write_family};

fn main() -> asymspec::Result<()> {
    let built = FamilySpec::diag_expr(&["1", "2 + h", "exp(-h) * i"])?;
    println!("{}", to_json_string(&family_to_json(&built)));
    println!("at h = 0.5: {:?}", built.eval(0.5)?);

    let (_, family) = commuting_nilpotent_pair()?;

    let dir = std::env::temp_dir().join("asymspec-family-files");
    let path = dir.join("pair.json");
    write_family(&family, &path)?;
    let loaded = load_family(&path)?;
    println!(
        "round trip equal at h = 0.3: {}",
        loaded.eval(0.3)? == family.eval(0.3)?
    );

    for bad in [
        r#"{"dim": 2, "node": {"kind": "mystery"}}"#,
        r#"{"dim": 2, "node": {"kind": "diag_expr", "entries": ["1"]}}"#,
        r#"{"dim": 2, "node": {"kind": "jordan", "eigenvalue": 0, "extra": 1}}"#,
    ] {
        match family_from_str(bad) {
            Ok(_) => println!("accepted: {bad}"),
            Err(e) => println!("rejected: {e}"),
        }
    }
    Ok(())
}
