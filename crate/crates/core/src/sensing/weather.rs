use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeatherCondition {
    pub name: &'static str,
    /// Sun altitude in degrees.
    pub sun_altitude: f64,
    pub difficulty: Difficulty,
}

const fn w(name: &'static str, sun_altitude: f64, difficulty: Difficulty) -> WeatherCondition {
    WeatherCondition {
        name,
        sun_altitude,
        difficulty,
    }
}

pub const WEATHER_CONDITIONS: [WeatherCondition; 12] = [
    w("clear_noon", 70.0, Difficulty::Easy),
    w("cloudy_noon", 60.0, Difficulty::Easy),
    w("wet_noon", 65.0, Difficulty::Easy),
    w("soft_rain", 60.0, Difficulty::Moderate),
    w("foggy_noon", 45.0, Difficulty::Moderate),
    w("clear_sunset", 10.0, Difficulty::Moderate),
    w("night_clear", -40.0, Difficulty::Moderate),
    w("dawn", 5.0, Difficulty::Moderate),
    w("heavy_rain", 50.0, Difficulty::Hard),
    w("rainy_sunset", 12.0, Difficulty::Hard),
    w("night_rainy", -35.0, Difficulty::Hard),
    w("night_foggy", -35.0, Difficulty::Hard),
];

pub fn weather_by_name(name: &str) -> Option<&'static WeatherCondition> {
    WEATHER_CONDITIONS.iter().find(|c| c.name == name)
}

/// Index of a condition in the registry.
pub fn weather_index(name: &str) -> Option<usize> {
    WEATHER_CONDITIONS.iter().position(|c| c.name == name)
}
