//! Option quotes, liquidity filters, moneyness/maturity buckets and the CSV
//! interchange format shared by every command.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Calendar days per year used to turn days-to-maturity into a year fraction.
pub const DAYS_PER_YEAR: f64 = 365.0;

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("moneyness {moneyness} / dtm {dtm} outside the bucketable range")]
    OutOfRange { moneyness: f64, dtm: f64 },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One European call contract observed (or generated) on a quote date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub quote_date: NaiveDate,
    pub spot: f64,
    pub strike: f64,
    /// Year fraction, always `dtm / 365`.
    pub maturity: f64,
    pub rate: f64,
    pub price: f64,
    pub bid: f64,
    pub ask: f64,
    pub volume: u64,
    pub open_interest: u64,
    /// Calendar days to expiry. Real-valued so that year-fraction grids
    /// (e.g. one month = 365/12 days) survive a CSV round trip exactly.
    pub dtm: f64,
    /// Monte-Carlo standard error of `price`, when the price is simulated.
    pub std_error: Option<f64>,
}

impl OptionQuote {
    /// Quote with liquidity fields defaulted so that it passes every
    /// liquidity predicate (bid = ask = price, unit volume and open interest).
    pub fn new(quote_date: NaiveDate, spot: f64, strike: f64, dtm: f64, rate: f64, price: f64) -> Self {
        Self {
            quote_date,
            spot,
            strike,
            maturity: dtm / DAYS_PER_YEAR,
            rate,
            price,
            bid: price,
            ask: price,
            volume: 1,
            open_interest: 1,
            dtm,
            std_error: None,
        }
    }

    pub fn moneyness(&self) -> f64 {
        self.spot / self.strike
    }

    /// Lower no-arbitrage bound of a European call, `max(S - K e^{-rT}, 0)`.
    pub fn lower_bound(&self) -> f64 {
        (self.spot - self.strike * (-self.rate * self.maturity).exp()).max(0.0)
    }
}

/// The five liquidity/no-arbitrage screens applied to market data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterRule {
    /// Zero trading volume or zero open interest.
    NoActivity,
    /// Bid below 0.05 while the ask exceeds twice the bid.
    WideQuote,
    /// Less than one calendar day to expiry.
    Expiring,
    /// Moneyness outside [0.80, 1.50].
    MoneynessRange,
    /// Price below the European call lower bound.
    LowerBound,
}

impl FilterRule {
    pub const ALL: [FilterRule; 5] = [
        FilterRule::NoActivity,
        FilterRule::WideQuote,
        FilterRule::Expiring,
        FilterRule::MoneynessRange,
        FilterRule::LowerBound,
    ];

    /// True when `quote` must be discarded under this rule.
    pub fn rejects(self, quote: &OptionQuote) -> bool {
        match self {
            FilterRule::NoActivity => quote.volume == 0 || quote.open_interest == 0,
            FilterRule::WideQuote => quote.bid < 0.05 && quote.ask > 2.0 * quote.bid,
            FilterRule::Expiring => quote.dtm < 1.0,
            FilterRule::MoneynessRange => {
                let m = quote.moneyness();
                !(0.80..=1.50).contains(&m)
            }
            FilterRule::LowerBound => quote.price < quote.lower_bound(),
        }
    }
}

/// Drops every quote rejected by any of the five rules, preserving order.
pub fn filter_illiquid(quotes: &[OptionQuote]) -> Vec<OptionQuote> {
    filter_with(quotes, &FilterRule::ALL)
}

pub fn filter_with(quotes: &[OptionQuote], rules: &[FilterRule]) -> Vec<OptionQuote> {
    quotes
        .iter()
        .filter(|q| !rules.iter().any(|r| r.rejects(q)))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MoneynessClass {
    DeepOtm,
    Otm,
    Atm,
    Itm,
    DeepItm,
}

impl MoneynessClass {
    pub const ALL: [MoneynessClass; 5] = [
        MoneynessClass::DeepOtm,
        MoneynessClass::Otm,
        MoneynessClass::Atm,
        MoneynessClass::Itm,
        MoneynessClass::DeepItm,
    ];

    /// Left-closed intervals except the open lower end at 0.8.
    pub fn of(moneyness: f64) -> Option<Self> {
        if !(moneyness > 0.8 && moneyness < 1.5) {
            return None;
        }
        Some(if moneyness < 0.9 {
            MoneynessClass::DeepOtm
        } else if moneyness < 0.99 {
            MoneynessClass::Otm
        } else if moneyness < 1.01 {
            MoneynessClass::Atm
        } else if moneyness < 1.1 {
            MoneynessClass::Itm
        } else {
            MoneynessClass::DeepItm
        })
    }

    pub fn label(self) -> &'static str {
        match self {
            MoneynessClass::DeepOtm => "DeepOTM",
            MoneynessClass::Otm => "OTM",
            MoneynessClass::Atm => "ATM",
            MoneynessClass::Itm => "ITM",
            MoneynessClass::DeepItm => "DeepITM",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MaturityClass {
    Short,
    Medium,
    Long,
}

impl MaturityClass {
    pub const ALL: [MaturityClass; 3] = [MaturityClass::Short, MaturityClass::Medium, MaturityClass::Long];

    pub fn of(dtm: f64) -> Option<Self> {
        if !(dtm >= 1.0) {
            return None;
        }
        Some(if dtm < 60.0 {
            MaturityClass::Short
        } else if dtm < 180.0 {
            MaturityClass::Medium
        } else {
            MaturityClass::Long
        })
    }

    pub fn label(self) -> &'static str {
        match self {
            MaturityClass::Short => "Short",
            MaturityClass::Medium => "Medium",
            MaturityClass::Long => "Long",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bucket {
    pub moneyness_class: MoneynessClass,
    pub maturity_class: MaturityClass,
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.moneyness_class.label(), self.maturity_class.label())
    }
}

pub fn classify(quote: &OptionQuote) -> Result<Bucket, MarketDataError> {
    classify_point(quote.moneyness(), quote.dtm)
}

pub fn classify_point(moneyness: f64, dtm: f64) -> Result<Bucket, MarketDataError> {
    match (MoneynessClass::of(moneyness), MaturityClass::of(dtm)) {
        (Some(moneyness_class), Some(maturity_class)) => Ok(Bucket {
            moneyness_class,
            maturity_class,
        }),
        _ => Err(MarketDataError::OutOfRange { moneyness, dtm }),
    }
}

/// Header names for each field. Optional columns fall back to pass-filter
/// values when absent from the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub quote_date: String,
    pub spot: String,
    pub strike: String,
    pub dtm: String,
    pub rate: String,
    pub price: String,
    pub bid: String,
    pub ask: String,
    pub volume: String,
    pub open_interest: String,
    pub std_error: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            quote_date: "quote_date".into(),
            spot: "spot".into(),
            strike: "strike".into(),
            dtm: "dtm".into(),
            rate: "rate".into(),
            price: "price".into(),
            bid: "bid".into(),
            ask: "ask".into(),
            volume: "volume".into(),
            open_interest: "open_interest".into(),
            std_error: "std_error".into(),
        }
    }
}

pub fn read_quotes(path: impl AsRef<Path>, schema: &ColumnMap) -> Result<Vec<OptionQuote>, MarketDataError> {
    read_quotes_from(File::open(path)?, schema)
}

pub fn read_quotes_from<R: Read>(reader: R, schema: &ColumnMap) -> Result<Vec<OptionQuote>, MarketDataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| find(name).ok_or_else(|| MarketDataError::MissingColumn(name.to_string()));

    let date_col = required(&schema.quote_date)?;
    let spot_col = required(&schema.spot)?;
    let strike_col = required(&schema.strike)?;
    let dtm_col = required(&schema.dtm)?;
    let rate_col = required(&schema.rate)?;
    let price_col = required(&schema.price)?;
    let bid_col = find(&schema.bid);
    let ask_col = find(&schema.ask);
    let volume_col = find(&schema.volume);
    let oi_col = find(&schema.open_interest);
    let se_col = find(&schema.std_error);

    let mut quotes = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |col: usize| record.get(col).unwrap_or("");
        let err = |col: usize, message: String| MarketDataError::Parse {
            row,
            column: headers.get(col).unwrap_or("?").to_string(),
            message,
        };
        let real = |col: usize| -> Result<f64, MarketDataError> {
            field(col)
                .parse::<f64>()
                .map_err(|e| err(col, format!("{e}: {:?}", field(col))))
        };
        let count = |col: usize| -> Result<u64, MarketDataError> {
            let raw = field(col);
            // Vendors often write integral counts as "12.0".
            raw.parse::<u64>().or_else(|_| match raw.parse::<f64>() {
                Ok(v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as u64),
                _ => Err(err(col, format!("not a count: {raw:?}"))),
            })
        };

        let quote_date = NaiveDate::parse_from_str(field(date_col), DATE_FORMAT)
            .map_err(|e| err(date_col, format!("{e}: {:?}", field(date_col))))?;
        let mut q = OptionQuote::new(
            quote_date,
            real(spot_col)?,
            real(strike_col)?,
            real(dtm_col)?,
            real(rate_col)?,
            real(price_col)?,
        );
        if !(q.spot > 0.0 && q.strike > 0.0) {
            return Err(err(spot_col, "spot and strike must be positive".into()));
        }
        if let Some(c) = bid_col {
            q.bid = real(c)?;
        }
        if let Some(c) = ask_col {
            q.ask = real(c)?;
        }
        if let Some(c) = volume_col {
            q.volume = count(c)?;
        }
        if let Some(c) = oi_col {
            q.open_interest = count(c)?;
        }
        if let Some(c) = se_col {
            if !field(c).is_empty() {
                q.std_error = Some(real(c)?);
            }
        }
        quotes.push(q);
    }
    Ok(quotes)
}

pub fn write_quotes(path: impl AsRef<Path>, quotes: &[OptionQuote]) -> Result<(), MarketDataError> {
    let mut file = File::create(path)?;
    write_quotes_to(&mut file, quotes)?;
    file.flush()?;
    Ok(())
}

/// Writes the default-schema CSV. The `std_error` column is emitted only
/// when at least one quote carries one.
pub fn write_quotes_to<W: Write>(writer: W, quotes: &[OptionQuote]) -> Result<(), MarketDataError> {
    let with_se = quotes.iter().any(|q| q.std_error.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![
        "quote_date",
        "spot",
        "strike",
        "dtm",
        "rate",
        "price",
        "bid",
        "ask",
        "volume",
        "open_interest",
    ];
    if with_se {
        header.push("std_error");
    }
    w.write_record(&header)?;
    for q in quotes {
        let mut rec = vec![
            q.quote_date.format(DATE_FORMAT).to_string(),
            q.spot.to_string(),
            q.strike.to_string(),
            q.dtm.to_string(),
            q.rate.to_string(),
            q.price.to_string(),
            q.bid.to_string(),
            q.ask.to_string(),
            q.volume.to_string(),
            q.open_interest.to_string(),
        ];
        if with_se {
            rec.push(q.std_error.map(|s| s.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
