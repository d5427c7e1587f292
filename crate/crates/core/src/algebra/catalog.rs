//! Registry of the 21 operations, indexed by operation class and object kind.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpClass {
    Create,
    Delete,
    Transform,
    Separate,
    Combine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Table,
    Column,
    Row,
}

/// Cardinality bin of an input or output set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arity {
    Zero,
    One,
    Many,
}

impl OpClass {
    pub const ALL: [OpClass; 5] = [
        OpClass::Create,
        OpClass::Delete,
        OpClass::Transform,
        OpClass::Separate,
        OpClass::Combine,
    ];

    /// Input and output cardinality bins shared by every operation of the class.
    pub fn bins(self) -> (Arity, Arity) {
        match self {
            OpClass::Create => (Arity::Zero, Arity::One),
            OpClass::Delete => (Arity::One, Arity::Zero),
            OpClass::Transform => (Arity::One, Arity::One),
            OpClass::Separate => (Arity::One, Arity::Many),
            OpClass::Combine => (Arity::Many, Arity::One),
        }
    }

    pub fn sets(self) -> &'static str {
        match self {
            OpClass::Create => "0:1",
            OpClass::Delete => "1:0",
            OpClass::Transform => "1:1",
            OpClass::Separate => "1:N",
            OpClass::Combine => "N:1",
        }
    }
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 3] = [ObjectKind::Table, ObjectKind::Column, ObjectKind::Row];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    CreateTable,
    CreateColumn,
    CreateRow,
    DeleteTable,
    DeleteColumn,
    DeleteRow,
    Rearrange,
    Reshape,
    TransformColumn,
    TransformRow,
    Subset,
    Decompose,
    Split,
    SeparateColumn,
    SeparateRow,
    Extend,
    Supplement,
    Match,
    CombineColumns,
    Summarize,
    Interpolate,
}

impl OpKind {
    pub const ALL: [OpKind; 21] = [
        OpKind::CreateTable,
        OpKind::CreateColumn,
        OpKind::CreateRow,
        OpKind::DeleteTable,
        OpKind::DeleteColumn,
        OpKind::DeleteRow,
        OpKind::Rearrange,
        OpKind::Reshape,
        OpKind::TransformColumn,
        OpKind::TransformRow,
        OpKind::Subset,
        OpKind::Decompose,
        OpKind::Split,
        OpKind::SeparateColumn,
        OpKind::SeparateRow,
        OpKind::Extend,
        OpKind::Supplement,
        OpKind::Match,
        OpKind::CombineColumns,
        OpKind::Summarize,
        OpKind::Interpolate,
    ];

    pub fn cell(self) -> (OpClass, ObjectKind) {
        use ObjectKind::*;
        use OpClass::*;
        match self {
            OpKind::CreateTable => (Create, Table),
            OpKind::CreateColumn => (Create, Column),
            OpKind::CreateRow => (Create, Row),
            OpKind::DeleteTable => (Delete, Table),
            OpKind::DeleteColumn => (Delete, Column),
            OpKind::DeleteRow => (Delete, Row),
            OpKind::Rearrange | OpKind::Reshape => (Transform, Table),
            OpKind::TransformColumn => (Transform, Column),
            OpKind::TransformRow => (Transform, Row),
            OpKind::Subset | OpKind::Decompose | OpKind::Split => (Separate, Table),
            OpKind::SeparateColumn => (Separate, Column),
            OpKind::SeparateRow => (Separate, Row),
            OpKind::Extend | OpKind::Supplement | OpKind::Match => (Combine, Table),
            OpKind::CombineColumns => (Combine, Column),
            OpKind::Summarize | OpKind::Interpolate => (Combine, Row),
        }
    }

    pub fn class(self) -> OpClass {
        self.cell().0
    }

    pub fn object(self) -> ObjectKind {
        self.cell().1
    }

    pub fn name(self) -> &'static str {
        match self {
            OpKind::CreateTable => "create_table",
            OpKind::CreateColumn => "create_column",
            OpKind::CreateRow => "create_row",
            OpKind::DeleteTable => "delete_table",
            OpKind::DeleteColumn => "delete_column",
            OpKind::DeleteRow => "delete_row",
            OpKind::Rearrange => "rearrange",
            OpKind::Reshape => "reshape",
            OpKind::TransformColumn => "transform_column",
            OpKind::TransformRow => "transform_row",
            OpKind::Subset => "subset",
            OpKind::Decompose => "decompose",
            OpKind::Split => "split",
            OpKind::SeparateColumn => "separate_column",
            OpKind::SeparateRow => "separate_row",
            OpKind::Extend => "extend",
            OpKind::Supplement => "supplement",
            OpKind::Match => "match",
            OpKind::CombineColumns => "combine_columns",
            OpKind::Summarize => "summarize",
            OpKind::Interpolate => "interpolate",
        }
    }

    /// Whether `inputs -> outputs` table nodes is a legal provenance edge for
    /// this operation.
    ///
    /// Table-level operations move whole tables, so their node arity is the
    /// class's cardinality. Column- and row-level operations rewrite one
    /// table into one table; their cardinality applies to the columns or
    /// rows inside it.
    pub fn accepts_table_arity(self, inputs: usize, outputs: usize) -> bool {
        if self.object() != ObjectKind::Table {
            return inputs == 1 && outputs == 1;
        }
        match self {
            OpKind::CreateTable => inputs == 0 && outputs == 1,
            OpKind::DeleteTable => inputs == 1 && outputs == 0,
            OpKind::Rearrange | OpKind::Reshape => inputs == 1 && outputs == 1,
            OpKind::Subset | OpKind::Split => inputs == 1 && outputs == 2,
            // A partition has one table per level; an empty input has none.
            OpKind::Decompose => inputs == 1,
            OpKind::Extend => inputs >= 2 && outputs == 1,
            OpKind::Supplement | OpKind::Match => inputs == 2 && outputs == 1,
            _ => false,
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn every_cell_is_populated() {
        let cells: HashSet<_> = OpKind::ALL.iter().map(|k| k.cell()).collect();
        assert_eq!(cells.len(), 15);
    }

    #[test]
    fn names_are_unique() {
        let names: HashSet<_> = OpKind::ALL.iter().map(|k| k.name()).collect();
        assert_eq!(names.len(), 21);
    }
}
