//! Small synthetic datasets used by the examples, the tests and the
//! service demo. Numbers are made up but shaped like the public data they
//! stand in for.

use crate::dsl;
use crate::table::{Field, Table};
use crate::value::{DataKind, DataType, Value};
use crate::workspace::Workspace;

fn field(name: &str, kind: DataKind) -> Field {
    Field::new(name, DataType::nullable(kind))
}

pub const SUPPLIERS: [&str; 6] = [
    "Alameda County WD",
    "Beverly Hills",
    "Coachella Valley WD",
    "Davis",
    "East Bay MUD",
    "Fresno",
];

pub const SUMMER_MONTHS: [u32; 3] = [6, 7, 8];

/// Monthly water production per supplier for the summers of 2015 and 2016.
/// Each row also carries the same month's 2013 figure in `amount_2013`, so
/// the year variable lives both in rows (`date`) and in a column name.
pub fn water_usage() -> Table {
    let mut rows = Vec::new();
    for (s, name) in SUPPLIERS.iter().enumerate() {
        let base = 900 + 275 * s as i64;
        for year in [2015, 2016] {
            for (m, month) in SUMMER_MONTHS.iter().enumerate() {
                let seasonal = base + 40 * m as i64;
                let amount = if year == 2015 {
                    seasonal * 3 / 4
                } else {
                    seasonal * 9 / 10
                };
                rows.push(vec![
                    Value::text(*name),
                    Value::date(year, *month, 1),
                    Value::Int(amount),
                    Value::Int(seasonal + 13 * s as i64),
                ]);
            }
        }
    }
    Table::from_rows(
        &[
            field("supplier", DataKind::Text),
            field("date", DataKind::Date),
            field("amount", DataKind::Integer),
            field("amount_2013", DataKind::Integer),
        ],
        rows,
    )
    .expect("fixture rows match the schema")
}

/// Service area region and population per supplier.
pub fn water_suppliers() -> Table {
    let regions = [
        "Bay Area", "South", "South", "Central", "Bay Area", "Central",
    ];
    let population = [340_000, 34_000, 280_000, 67_000, 1_380_000, 520_000];
    let rows = SUPPLIERS
        .iter()
        .zip(regions)
        .zip(population)
        .map(|((s, r), p)| vec![Value::text(*s), Value::text(r), Value::Int(p)])
        .collect();
    Table::from_rows(
        &[
            field("supplier", DataKind::Text),
            field("region", DataKind::Text),
            field("population", DataKind::Integer),
        ],
        rows,
    )
    .expect("fixture rows match the schema")
}

/// The 50 states plus the District of Columbia with rounded 2015
/// population estimates.
pub const STATES: [(&str, i64); 51] = [
    ("Alabama", 4_859_000),
    ("Alaska", 738_000),
    ("Arizona", 6_828_000),
    ("Arkansas", 2_978_000),
    ("California", 39_145_000),
    ("Colorado", 5_457_000),
    ("Connecticut", 3_591_000),
    ("Delaware", 946_000),
    ("District of Columbia", 672_000),
    ("Florida", 20_271_000),
    ("Georgia", 10_215_000),
    ("Hawaii", 1_432_000),
    ("Idaho", 1_655_000),
    ("Illinois", 12_860_000),
    ("Indiana", 6_620_000),
    ("Iowa", 3_124_000),
    ("Kansas", 2_912_000),
    ("Kentucky", 4_425_000),
    ("Louisiana", 4_671_000),
    ("Maine", 1_329_000),
    ("Maryland", 6_006_000),
    ("Massachusetts", 6_794_000),
    ("Michigan", 9_923_000),
    ("Minnesota", 5_490_000),
    ("Mississippi", 2_992_000),
    ("Missouri", 6_084_000),
    ("Montana", 1_033_000),
    ("Nebraska", 1_896_000),
    ("Nevada", 2_891_000),
    ("New Hampshire", 1_331_000),
    ("New Jersey", 8_958_000),
    ("New Mexico", 2_085_000),
    ("New York", 19_796_000),
    ("North Carolina", 10_043_000),
    ("North Dakota", 757_000),
    ("Ohio", 11_613_000),
    ("Oklahoma", 3_911_000),
    ("Oregon", 4_029_000),
    ("Pennsylvania", 12_803_000),
    ("Rhode Island", 1_056_000),
    ("South Carolina", 4_896_000),
    ("South Dakota", 858_000),
    ("Tennessee", 6_600_000),
    ("Texas", 27_469_000),
    ("Utah", 2_996_000),
    ("Vermont", 626_000),
    ("Virginia", 8_383_000),
    ("Washington", 7_170_000),
    ("West Virginia", 1_844_000),
    ("Wisconsin", 5_771_000),
    ("Wyoming", 586_000),
];

pub fn state_population() -> Table {
    let rows = STATES
        .iter()
        .map(|(s, p)| vec![Value::text(*s), Value::Int(*p)])
        .collect();
    Table::from_rows(
        &[
            field("state", DataKind::Text),
            field("population", DataKind::Integer),
        ],
        rows,
    )
    .expect("fixture rows match the schema")
}

/// Refugee arrivals per state over a decade. Wyoming took none, so it has
/// no row at all.
pub fn refugee_arrivals_by_state() -> Table {
    let rows = STATES
        .iter()
        .filter(|(s, _)| *s != "Wyoming")
        .map(|(s, p)| vec![Value::text(*s), Value::Int(p / 450 + 17)])
        .collect();
    Table::from_rows(
        &[
            field("state", DataKind::Text),
            field("arrivals", DataKind::Integer),
        ],
        rows,
    )
    .expect("fixture rows match the schema")
}

/// Arrivals per origin country, broken down by religion here and by
/// destination state in [`arrivals_by_destination`]. Totals differ by 4
/// (religion minus destination); per country only Iran (+1) and Iraq (-5)
/// differ, measured destination minus religion.
pub fn arrivals_by_religion() -> Table {
    let rows = [
        ("Bhutan", "Hindu", 51_220),
        ("Bhutan", "Buddhist", 32_911),
        ("Burma", "Christian", 84_420),
        ("Burma", "Muslim", 22_005),
        ("Burma", "Buddhist", 35_871),
        ("Iran", "Christian", 21_006),
        ("Iran", "Bahai", 9_802),
        ("Iran", "Muslim", 3_130),
        ("Iraq", "Muslim", 89_460),
        ("Iraq", "Christian", 41_093),
        ("Somalia", "Muslim", 92_113),
        ("Cuba", "Christian", 60_344),
        ("Cuba", "Other", 13_225),
        ("Dem. Rep. Congo", "Christian", 39_801),
        ("Dem. Rep. Congo", "Muslim", 1_513),
        ("Ukraine", "Christian", 28_090),
        ("Eritrea", "Christian", 14_312),
        ("Eritrea", "Muslim", 3_109),
        ("Syria", "Muslim", 2_117),
        ("Syria", "Christian", 262),
        ("Sudan", "Muslim", 7_843),
        ("Afghanistan", "Muslim", 12_310),
        ("Russia", "Christian", 6_016),
        ("Vietnam", "Buddhist", 3_742),
        ("Vietnam", "Christian", 1_451),
        ("Ethiopia", "Christian", 7_311),
        ("Ethiopia", "Muslim", 7_499),
        ("Moldova", "Christian", 5_033),
        ("Colombia", "Christian", 2_906),
        ("Liberia", "Christian", 2_736),
        ("Other", "Other", 6_334),
    ];
    arrivals_table("religion", &rows)
}

pub fn arrivals_by_destination() -> Table {
    let rows = [
        ("Bhutan", "Pennsylvania", 13_100),
        ("Bhutan", "Other states", 71_031),
        ("Burma", "Texas", 21_330),
        ("Burma", "New York", 14_220),
        ("Burma", "Other states", 106_746),
        ("Iran", "California", 28_703),
        ("Iran", "Other states", 5_236),
        ("Iraq", "Michigan", 34_600),
        ("Iraq", "California", 29_120),
        ("Iraq", "Other states", 66_828),
        ("Somalia", "Minnesota", 17_305),
        ("Somalia", "Other states", 74_808),
        ("Cuba", "Florida", 70_020),
        ("Cuba", "Other states", 3_549),
        ("Dem. Rep. Congo", "Other states", 41_314),
        ("Ukraine", "Washington", 9_104),
        ("Ukraine", "Other states", 18_986),
        ("Eritrea", "Other states", 17_421),
        ("Syria", "Other states", 2_379),
        ("Sudan", "Other states", 7_843),
        ("Afghanistan", "Other states", 12_310),
        ("Russia", "Other states", 6_016),
        ("Vietnam", "Other states", 5_193),
        ("Ethiopia", "Other states", 14_810),
        ("Moldova", "Other states", 5_033),
        ("Colombia", "Other states", 2_906),
        ("Liberia", "Other states", 2_736),
        ("Other", "Other states", 6_334),
    ];
    arrivals_table("state", &rows)
}

fn arrivals_table(facet: &str, rows: &[(&str, &str, i64)]) -> Table {
    let rows = rows
        .iter()
        .map(|(c, f, n)| vec![Value::text(*c), Value::text(*f), Value::Int(*n)])
        .collect();
    Table::from_rows(
        &[
            field("country", DataKind::Text),
            field(facet, DataKind::Text),
            field("arrivals", DataKind::Integer),
        ],
        rows,
    )
    .expect("fixture rows match the schema")
}

/// Two tables with the same total but three arrivals moved from one group
/// to another.
pub fn equal_totals_unequal_groups() -> (Table, Table) {
    let make = |a: i64, b: i64| {
        arrivals_table(
            "source",
            &[("Iran", "x", a), ("Iraq", "x", b), ("Syria", "x", 40)],
        )
    };
    (make(10, 20), make(13, 17))
}

/// A water-story session over [`water_usage`] and [`water_suppliers`]:
/// tidy the usage table step by step, join it to supplier populations, rank by
/// per-capita use and summarize per region. Run it with
/// [`water_session`]; the graph has 25 nodes and two sinks (`ranked` and
/// `by_region`).
pub const WATER_SESSION_PIPELINE: &str = r#"# tidy the usage table: the 2013 figures become their own rows
(usage_2015, usage_2016) = subset usage where year(date) == 2015
base_2013 = transform usage_2015 col date = with_year(date, 2013)
(only_2013, amount_2015) = split base_2013 on supplier cols [amount]
delete amount_2015
tidy_2013 = transform only_2013 col amount_2013 = amount_2013 as amount
(tidy_2015, dropped_2015) = split usage_2015 on supplier cols [amount_2013]
(tidy_2016, dropped_2016) = split usage_2016 on supplier cols [amount_2013]
delete dropped_2015
delete dropped_2016
tidy = extend tidy_2015, tidy_2016, tidy_2013
tidy_sorted = rearrange tidy sort supplier, date

# per-capita ranking
joined = supplement tidy_sorted with suppliers on supplier
per_capita = create_column joined col gallons float = float(amount) / float(population)
scaled = transform per_capita col gallons = gallons * 1000.0 as per_1000
ranked = rearrange scaled sort per_1000 desc

# per-region totals, one part per region
region = decompose scaled by region
sum_bay = summarize region_Bay_Area by region agg sum(amount) as total, count() as months
sum_central = summarize region_Central by region agg sum(amount) as total, count() as months
sum_south = summarize region_South by region agg sum(amount) as total, count() as months
by_region = extend sum_bay, sum_central, sum_south
"#;

/// Runs [`WATER_SESSION_PIPELINE`] in a fresh workspace holding `usage` and
/// `suppliers`.
pub fn water_session() -> Workspace {
    let mut ws = Workspace::sealed();
    ws.bind("usage", water_usage(), "load \"water_usage.csv\" as usage")
        .expect("fresh workspace");
    ws.bind(
        "suppliers",
        water_suppliers(),
        "load \"suppliers.csv\" as suppliers",
    )
    .expect("fresh workspace");
    let p = dsl::parse(WATER_SESSION_PIPELINE).expect("fixture pipeline parses");
    dsl::execute(&p, &mut ws).expect("fixture pipeline runs");
    ws
}
