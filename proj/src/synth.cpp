#include "ripplerec/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>

#include "ripplerec/binio.hpp"
#include "ripplerec/civil_time.hpp"
#include "ripplerec/dataset.hpp"
#include "ripplerec/rng.hpp"
#include "ripplerec/text.hpp"

namespace ripplerec {

namespace {

constexpr std::array<const char*, 24> kWords = {
    "wiadomosci", "sejm",    "mecz",    "gielda",  "premiera", "wywiad",
    "analiza",    "ranking", "pogoda",  "wybory",  "reprezentacja", "budzet",
    "festiwal",   "sensacja", "raport", "debata",  "transfer", "kulisy",
    "inwestycja", "protest", "rekord",  "sondaz",  "awans",    "kryzys"};

constexpr std::array<const char*, 7> kWeekdays = {"Sun", "Mon", "Tue", "Wed",
                                                  "Thu", "Fri", "Sat"};
constexpr std::array<const char*, 4> kBrowsers = {"chrome", "firefox", "safari", "edge"};
constexpr std::array<const char*, 5> kCities = {"Warszawa", "Krakow", "Gdansk",
                                                "Wroclaw", "Poznan"};
constexpr std::array<const char*, 5> kRegions = {"mazowieckie", "malopolskie",
                                                 "pomorskie", "dolnoslaskie",
                                                 "wielkopolskie"};

bool is_polish_holiday(int month, int day) {
  // Fixed-date holidays only; enough for a synthetic business-day flag.
  static constexpr std::array<std::pair<int, int>, 9> kHolidays = {
      {{1, 1}, {1, 6}, {5, 1}, {5, 3}, {8, 15}, {11, 1}, {11, 11}, {12, 25}, {12, 26}}};
  return std::find(kHolidays.begin(), kHolidays.end(), std::make_pair(month, day)) !=
         kHolidays.end();
}

std::string make_title(Rng& rng, int min_words, int max_words) {
  const int n = min_words + static_cast<int>(rng.bounded(max_words - min_words + 1));
  std::string title;
  for (int i = 0; i < n; ++i) {
    if (i > 0) title += ' ';
    title += kWords[rng.bounded(kWords.size())];
  }
  return title;
}

std::vector<double> topic_centroid(uint64_t seed, int topic) {
  Rng rng(mix_seed(seed, 0x7031c5, static_cast<uint64_t>(topic)));
  std::vector<double> v(kContentEmbeddingDim);
  double norm2 = 0.0;
  for (auto& x : v) {
    x = rng.gaussian();
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

struct SynthItem {
  std::string id;
  int topic;
  int day = -1;  // only used with daily_catalog
};

struct SynthUser {
  std::string id;
  int primary_topic;
  std::vector<double> topic_prefs;
  std::string browser;
  std::string device;
  bool logged_in;
  bool subscriber;
};

AtomicValue tok(std::string s) { return AtomicValue(std::move(s)); }
AtomicValue num(double v) { return AtomicValue(v); }

}  // namespace

void SynthConfig::validate() const {
  if (n_users < 1 || n_items < 1 || n_days < 1 || n_topics < 1) {
    throw ConfigError("synth: all counts must be >= 1");
  }
  if (n_topics > n_items) {
    throw ConfigError("synth: n_topics must not exceed n_items");
  }
  if (click_noise < 0.0 || click_noise > 1.0) {
    throw ConfigError("synth: click_noise must be in [0, 1]");
  }
  if (preference_concentration < 0.0 || preference_concentration > 1.0) {
    throw ConfigError("synth: preference_concentration must be in [0, 1]");
  }
  if (target_click_rate <= 0.0 || target_click_rate >= 1.0) {
    throw ConfigError("synth: target_click_rate must be in (0, 1)");
  }
  if (impressions_per_user_day < 1) {
    throw ConfigError("synth: impressions_per_user_day must be >= 1");
  }
  parse_day(start_date);
  TimezoneRule::parse(timezone);
}

SynthResult generate_synthetic_dataset(const SynthConfig& config) {
  config.validate();

  const TimezoneRule tz = TimezoneRule::parse(config.timezone);
  const int64_t day0 = parse_day(config.start_date);

  std::vector<std::vector<double>> centroids(config.n_topics);
  for (int t = 0; t < config.n_topics; ++t) centroids[t] = topic_centroid(config.seed, t);

  const int n_authors = std::max(3, config.n_items / 8);

  // ---- items -------------------------------------------------------------
  AtomicTable item;
  item.fields = {
      {"item_id", FieldKind::Token},
      {"title", FieldKind::Token},
      {"lead", FieldKind::Token},
      {"text", FieldKind::Token},
      {"text_length", FieldKind::Float},
      {"author", FieldKind::Token},
      {"images", FieldKind::TokenSeq},
      {"wikidata_entities_words", FieldKind::TokenSeq},
      {"wikidata_entities_ids", FieldKind::TokenSeq},
      {"wikidata_entities_scores", FieldKind::FloatSeq},
      {"wikidata_topics", FieldKind::TokenSeq},
      {"wikidata_topics_scores", FieldKind::FloatSeq},
      {"content_publication_premium", FieldKind::Float},
      {"openai_embedding", FieldKind::FloatSeq},
      {"category_scores", FieldKind::FloatSeq},
      {"stylometrix_title", FieldKind::FloatSeq},
      {"stylometrix_lead", FieldKind::FloatSeq},
      {"stylometrix_text", FieldKind::FloatSeq},
  };

  std::vector<SynthItem> items(config.n_items);
  for (int i = 0; i < config.n_items; ++i) {
    Rng rng(mix_seed(config.seed, 0x17e2, static_cast<uint64_t>(i)));
    SynthItem& it = items[i];
    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "i%05d", i);
    it.id = idbuf;
    // First n_topics items pin one item per topic so every topic is covered.
    it.topic = i < config.n_topics ? i : static_cast<int>(rng.bounded(config.n_topics));
    if (config.daily_catalog) it.day = i % config.n_days;

    const std::string title = make_title(rng, 4, 8);
    const std::string lead = make_title(rng, 6, 10);
    const std::string text = make_title(rng, 12, 20);

    // 3 distinct entities from the topic's shared pool of 20.
    std::array<int, 20> pool_idx{};
    for (int j = 0; j < 20; ++j) pool_idx[j] = j;
    for (int j = 0; j < 3; ++j) {
      const int k = j + static_cast<int>(rng.bounded(20 - j));
      std::swap(pool_idx[j], pool_idx[k]);
    }
    TokenSeq entity_ids, entity_words;
    FloatSeq entity_scores;
    for (int j = 0; j < 3; ++j) {
      const int qid = 1000 + it.topic * 100 + pool_idx[j];
      entity_ids.push_back("Q" + std::to_string(qid));
      entity_words.push_back(std::string(kWords[qid % kWords.size()]));
      entity_scores.push_back(rng.uniform(0.3, 1.0));
    }

    FloatSeq embedding(kContentEmbeddingDim);
    double norm2 = 0.0;
    for (size_t d = 0; d < kContentEmbeddingDim; ++d) {
      embedding[d] = centroids[it.topic][d] + config.embedding_noise * rng.gaussian();
      norm2 += embedding[d] * embedding[d];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : embedding) x *= inv;

    FloatSeq categories(10);
    for (auto& c : categories) c = rng.uniform(0.0, 0.2);
    categories[it.topic % 10] = 0.7 + 0.3 * rng.uniform();

    const auto stylo = [&rng]() {
      FloatSeq s(5);
      for (auto& v : s) v = rng.uniform();
      return s;
    };

    item.rows.push_back({
        tok(it.id),
        tok(title),
        tok(lead),
        tok(text),
        num(static_cast<double>(text.size())),
        tok("author_" + std::to_string(rng.bounded(n_authors))),
        AtomicValue(TokenSeq{"img_" + it.id + "_0"}),
        AtomicValue(std::move(entity_words)),
        AtomicValue(std::move(entity_ids)),
        AtomicValue(std::move(entity_scores)),
        AtomicValue(TokenSeq{"T" + std::to_string(it.topic)}),
        AtomicValue(FloatSeq{rng.uniform(0.6, 1.0)}),
        num(rng.uniform() < 0.07 ? 1.0 : 0.0),
        AtomicValue(std::move(embedding)),
        AtomicValue(std::move(categories)),
        AtomicValue(stylo()),
        AtomicValue(stylo()),
        AtomicValue(stylo()),
    });
  }

  std::vector<std::vector<int>> day_catalog;
  if (config.daily_catalog) {
    day_catalog.resize(config.n_days);
    for (int i = 0; i < config.n_items; ++i) day_catalog[items[i].day].push_back(i);
  }

  // ---- users -------------------------------------------------------------
  AtomicTable user;
  user.fields = {
      {"user_id", FieldKind::Token},
      {"category_preferences", FieldKind::FloatSeq},
      {"user_sso_name", FieldKind::Token},
      {"browser", FieldKind::Token},
      {"device", FieldKind::Token},
  };

  std::vector<SynthUser> users(config.n_users);
  for (int u = 0; u < config.n_users; ++u) {
    Rng rng(mix_seed(config.seed, 0x5ce4, static_cast<uint64_t>(u)));
    SynthUser& su = users[u];
    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "u%05d", u);
    su.id = idbuf;
    su.primary_topic = static_cast<int>(rng.bounded(config.n_topics));

    const double w = config.preference_concentration;
    std::vector<double> raw(config.n_topics);
    double raw_sum = 0.0;
    for (auto& r : raw) {
      r = -std::log(std::max(rng.uniform(), 1e-12));
      raw_sum += r;
    }
    su.topic_prefs.assign(config.n_topics, 0.0);
    for (int t = 0; t < config.n_topics; ++t) {
      su.topic_prefs[t] = (1.0 - w) * raw[t] / raw_sum;
    }
    su.topic_prefs[su.primary_topic] += w;

    su.browser = kBrowsers[rng.bounded(kBrowsers.size())];
    su.device = rng.uniform() < 0.6 ? "mobile" : "desktop";
    su.logged_in = rng.uniform() < 0.3;
    su.subscriber = rng.uniform() < 0.1;

    FloatSeq cat_prefs(10, 0.0);
    for (int t = 0; t < config.n_topics; ++t) cat_prefs[t % 10] += su.topic_prefs[t];

    user.rows.push_back({
        tok(su.id),
        AtomicValue(std::move(cat_prefs)),
        su.logged_in ? tok("sso_" + su.id) : AtomicValue{},
        tok(su.browser),
        tok(su.device),
    });
  }

  // ---- interactions -------------------------------------------------------
  AtomicTable inter;
  inter.fields = {
      {"user_id", FieldKind::Token},
      {"item_id", FieldKind::Token},
      {"is_click", FieldKind::Float},
      {"event_timestamp_unix", FieldKind::Float},
      {"event_date", FieldKind::Token},
      {"weekday", FieldKind::Token},
      {"hour", FieldKind::Float},
      {"is_business_day", FieldKind::Float},
      {"ip_cnt", FieldKind::Float},
      {"pu_ip_cnt", FieldKind::Float},
      {"pv_cnt", FieldKind::Float},
      {"glowna_ip_cnt", FieldKind::Float},
      {"pv_on_content_publication_premium_cnt", FieldKind::Float},
      {"ses_duration_sum", FieldKind::Float},
      {"device_type", FieldKind::Token},
      {"context_client_brand", FieldKind::Token},
      {"context_client_version", FieldKind::Token},
      {"cs", FieldKind::Token},
      {"rh_user_agent", FieldKind::Token},
      {"latitude", FieldKind::Float},
      {"longitude", FieldKind::Float},
      {"accuracy_radius", FieldKind::Float},
      {"geoip_city_name", FieldKind::Token},
      {"geoip_region_name", FieldKind::Token},
      {"is_active_click", FieldKind::Float},
      {"is_active_pageview", FieldKind::Float},
      {"user_evoked_sso_logged_in", FieldKind::Float},
      {"user_subscriber", FieldKind::Float},
      {"lts_pred", FieldKind::Float},
  };

  const int mean_impr = config.impressions_per_user_day;
  const int lo = std::max(1, mean_impr / 2);
  const int hi = mean_impr + mean_impr / 2;

  for (int d = 0; d < config.n_days; ++d) {
    const int64_t day = day0 + d;
    int yy, mm, dd;
    civil_from_days(day, yy, mm, dd);
    const std::string event_date = format_day(day);
    const std::string weekday = kWeekdays[day_of_week(day)];
    const bool business =
        day_of_week(day) != 0 && day_of_week(day) != 6 && !is_polish_holiday(mm, dd);

    for (int u = 0; u < config.n_users; ++u) {
      Rng rng(mix_seed(config.seed, 0x1a7e9,
                       static_cast<uint64_t>(u) * 1000003ULL + static_cast<uint64_t>(d)));
      const SynthUser& su = users[u];
      const int count = lo + static_cast<int>(rng.bounded(static_cast<uint64_t>(hi - lo + 1)));

      for (int k = 0; k < count; ++k) {
        int item_idx;
        if (config.daily_catalog) {
          const auto& catalog = day_catalog[d];
          if (catalog.empty()) continue;
          item_idx = catalog[rng.bounded(catalog.size())];
        } else {
          item_idx = static_cast<int>(rng.bounded(static_cast<uint64_t>(config.n_items)));
        }
        const SynthItem& it = items[item_idx];

        const double pref = su.topic_prefs[it.topic];
        const double p_pref =
            std::min(1.0, config.target_click_rate * config.n_topics * pref);
        const double p = (1.0 - config.click_noise) * p_pref +
                         config.click_noise * config.target_click_rate;
        const bool click = rng.uniform() < p;

        // 04:00-20:00 UTC keeps the local calendar day unambiguous for any
        // supported zone.
        const int64_t sec_utc = 4 * 3600 + static_cast<int64_t>(rng.bounded(16 * 3600));
        const int64_t ts_guess = day * 86400 + sec_utc;
        const int64_t ts = ts_guess - tz.offset_seconds_at(ts_guess);
        const int hour =
            static_cast<int>(((ts + tz.offset_seconds_at(ts)) % 86400) / 3600);

        inter.rows.push_back({
            tok(su.id),
            tok(it.id),
            num(click ? 1.0 : 0.0),
            num(static_cast<double>(ts)),
            tok(event_date),
            tok(weekday),
            num(hour),
            num(business ? 1.0 : 0.0),
            num(1.0 + static_cast<double>(rng.bounded(4))),
            num(static_cast<double>(rng.bounded(3))),
            num(1.0 + static_cast<double>(rng.bounded(20))),
            num(static_cast<double>(rng.bounded(5))),
            num(static_cast<double>(rng.bounded(3))),
            num(rng.uniform(10.0, 600.0)),
            tok(su.device),
            tok(su.browser),
            tok(std::to_string(90 + rng.bounded(40))),
            tok(su.device == "mobile" ? "360x640" : "1920x1080"),
            tok("ua_" + su.browser),
            num(rng.uniform(49.0, 55.0)),
            num(rng.uniform(14.0, 24.0)),
            num(1.0 + static_cast<double>(rng.bounded(50))),
            tok(std::string(kCities[rng.bounded(kCities.size())])),
            tok(std::string(kRegions[rng.bounded(kRegions.size())])),
            num(click ? 1.0 : 0.0),
            num(1.0),
            num(su.logged_in ? 1.0 : 0.0),
            num(su.subscriber ? 1.0 : 0.0),
            num(rng.uniform()),
        });
      }
    }
  }

  SynthResult result;
  result.inter = std::move(inter);
  result.user = std::move(user);
  result.item = std::move(item);
  return result;
}

SynthPaths write_synthetic_dataset(const SynthResult& result,
                                   const std::filesystem::path& dir,
                                   const std::string& name) {
  std::filesystem::create_directories(dir);
  SynthPaths paths{dir / (name + ".inter"), dir / (name + ".user"), dir / (name + ".item")};
  write_atomic_file(result.inter, paths.inter);
  write_atomic_file(result.user, paths.user);
  write_atomic_file(result.item, paths.item);
  return paths;
}

SynthConfig synth_config_from_json_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: invalid JSON: ") + e.what());
  }
  SynthConfig config;
  const auto get = [&j](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  get("n_users", config.n_users);
  get("n_items", config.n_items);
  get("n_days", config.n_days);
  get("n_topics", config.n_topics);
  get("click_noise", config.click_noise);
  get("seed", config.seed);
  get("impressions_per_user_day", config.impressions_per_user_day);
  get("preference_concentration", config.preference_concentration);
  get("target_click_rate", config.target_click_rate);
  get("embedding_noise", config.embedding_noise);
  get("daily_catalog", config.daily_catalog);
  get("start_date", config.start_date);
  get("timezone", config.timezone);
  config.validate();
  return config;
}

}  // namespace ripplerec
