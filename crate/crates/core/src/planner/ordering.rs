use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::rdf::KgStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    Classes,
    Instances,
    ModelSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderingSpec {
    pub measure: Measure,
    pub direction: Direction,
}

impl OrderingSpec {
    pub const ALL: [OrderingSpec; 6] = [
        OrderingSpec::new(Measure::Classes, Direction::Ascending),
        OrderingSpec::new(Measure::Classes, Direction::Descending),
        OrderingSpec::new(Measure::Instances, Direction::Ascending),
        OrderingSpec::new(Measure::Instances, Direction::Descending),
        OrderingSpec::new(Measure::ModelSize, Direction::Ascending),
        OrderingSpec::new(Measure::ModelSize, Direction::Descending),
    ];

    pub const fn new(measure: Measure, direction: Direction) -> Self {
        OrderingSpec { measure, direction }
    }

    fn value(&self, stats: &KgStats) -> usize {
        match self.measure {
            Measure::Classes => stats.num_classes,
            Measure::Instances => stats.num_instances,
            Measure::ModelSize => stats.model_size,
        }
    }
}

/// Renders as `ModelSize-Desc`; parsing also accepts lowercase forms such as
/// `modelsize-desc` or `classes-asc`.
impl fmt::Display for OrderingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let measure = match self.measure {
            Measure::Classes => "Classes",
            Measure::Instances => "Instances",
            Measure::ModelSize => "ModelSize",
        };
        let direction = match self.direction {
            Direction::Ascending => "Asc",
            Direction::Descending => "Desc",
        };
        write!(f, "{measure}-{direction}")
    }
}

impl FromStr for OrderingSpec {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || PlanError::UnknownName { kind: "ordering", value: s.to_string() };
        let lower = s.to_ascii_lowercase();
        let (measure, direction) = lower.split_once('-').ok_or_else(unknown)?;
        let measure = match measure {
            "classes" => Measure::Classes,
            "instances" => Measure::Instances,
            "modelsize" | "model_size" => Measure::ModelSize,
            _ => return Err(unknown()),
        };
        let direction = match direction {
            "asc" | "ascending" => Direction::Ascending,
            "desc" | "descending" => Direction::Descending,
            _ => return Err(unknown()),
        };
        Ok(OrderingSpec { measure, direction })
    }
}

/// Sorts sources by (measure, id) ascending; `Descending` reverses that whole
/// order, so the two directions are exact mirror images even under ties.
pub fn order_kgs<'a>(stats: impl IntoIterator<Item = (&'a str, KgStats)>, spec: OrderingSpec) -> Vec<String> {
    let mut keyed: Vec<(usize, &str)> = stats.into_iter().map(|(id, s)| (spec.value(&s), id)).collect();
    keyed.sort();
    if spec.direction == Direction::Descending {
        keyed.reverse();
    }
    keyed.into_iter().map(|(_, id)| id.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sized(model_size: usize) -> KgStats {
        KgStats { num_classes: 0, num_instances: 0, model_size }
    }

    #[test]
    fn model_size_descending() {
        let stats = [("A", sized(10)), ("B", sized(5)), ("C", sized(7))];
        let spec = OrderingSpec::new(Measure::ModelSize, Direction::Descending);
        assert_eq!(order_kgs(stats, spec), vec!["A", "C", "B"]);
    }

    #[test]
    fn ties_follow_id_order() {
        let stats = [("C", sized(1)), ("A", sized(1)), ("B", sized(1))];
        let asc = order_kgs(stats, OrderingSpec::new(Measure::ModelSize, Direction::Ascending));
        assert_eq!(asc, vec!["A", "B", "C"]);
        let desc = order_kgs(stats, OrderingSpec::new(Measure::ModelSize, Direction::Descending));
        assert_eq!(desc, vec!["C", "B", "A"]);
    }

    #[test]
    fn single_source() {
        assert_eq!(order_kgs([("A", sized(3))], OrderingSpec::ALL[0]), vec!["A"]);
    }

    #[test]
    fn parse_and_display() {
        for spec in OrderingSpec::ALL {
            assert_eq!(spec.to_string().parse::<OrderingSpec>(), Ok(spec));
        }
        assert_eq!(
            "modelsize-desc".parse::<OrderingSpec>(),
            Ok(OrderingSpec::new(Measure::ModelSize, Direction::Descending))
        );
        assert!("size-up".parse::<OrderingSpec>().is_err());
    }
}
