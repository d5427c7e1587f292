//! CSV parsing with type inference, explicit column types, and the JSON
//! table format.

use tabletide::io::{parse_csv, parse_table_json, write_csv, write_table_json, CsvOptions};
use tabletide::value::DataKind;

const TEXT: &str = "\
station;day;reading;ok
north;2024-03-01;1.5;true
south;2024-03-01;;false
\"east; upper\";2024-03-02;2.25;true
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = CsvOptions {
        delimiter: ';',
        ..CsvOptions::default()
    };
    let t = parse_csv(TEXT, &opts)?;
    println!("inferred:\n{t}");

    let forced = CsvOptions {
        types: vec![("day".to_string(), DataKind::Text)],
        ..opts.clone()
    };
    let schema: Vec<String> = parse_csv(TEXT, &forced)?
        .schema()
        .iter()
        .map(|f| format!("{}:{}", f.name, f.dtype()))
        .collect();
    println!("with `day` forced to text: {}\n", schema.join(", "));

    println!("as comma CSV:\n{}", write_csv(&t, &CsvOptions::default())?);
    let json = write_table_json(&t);
    println!("as JSON:\n{json}\n");
    assert_eq!(parse_table_json(&json)?.rows().collect::<Vec<_>>(), t.rows().collect::<Vec<_>>());
    Ok(())
}
