// SPDX-License-Identifier: Apache-2.0
#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"
#include "exhibit/ingest.hpp"

#include <array>
#include <cstdio>

namespace exhibit {

using nlohmann::json;

namespace {

struct Theme {
    const char* name;
    const char* title;
    const char* title_de;
    const char* description;
    const char* description_de;
    const char* catalog_prefix;
    std::array<const char*, 3> fields; // first is the item field
    std::array<const char*, 3> labels_de;
    std::vector<std::array<const char*, 3>> items;
};

const std::vector<Theme>& themes()
{
    static const std::vector<Theme> t = {
        {"mineralogy",
         "Mineralogical Collection",
         "Mineralogische Sammlung",
         "Minerals, ores and gemstones from historic mining regions, used for teaching mineral identification.",
         "Minerale, Erze und Edelsteine aus historischen Bergbauregionen.",
         "MIN",
         {"Mineral", "Locality", "Formula"},
         {"Mineral", "Fundort", "Formel"},
         {{"Quartz", "Alps", "SiO2"},
          {"Sanrománit", "Salar de Atacama", "Na2CaCu(CO3)4"},
          {"Fluorite", "Harz", "CaF2"},
          {"Pyrite", "Elba", "FeS2"},
          {"Malachite", "Tsumeb", "Cu2CO3(OH)2"},
          {"Amethyst", "Idar-Oberstein", "SiO2"},
          {"Galena", "Freiberg", "PbS"},
          {"Azurite", "Lavrion", "Cu3(CO3)2(OH)2"}}},
        {"sculpture-casts",
         "Collection of Classical Sculpture Casts",
         "Sammlung klassischer Skulpturenabgüsse",
         "Plaster casts and bronze replicas of ancient sculpture, assembled for archaeology classes.",
         "Gipsabgüsse und Bronzerepliken antiker Skulpturen für die Lehre.",
         "SKU",
         {"Object", "Material", "Period"},
         {"Objekt", "Material", "Epoche"},
         {{"Bronze goose statue", "bronze", "Hellenistic"},
          {"Plinth of the goose statue", "marble", "Hellenistic"},
          {"Torso of an athlete", "plaster", "Classical"},
          {"Portrait bust", "plaster", "Roman"},
          {"Votive relief", "plaster", "Archaic"},
          {"Head of a horse", "bronze", "Classical"}}},
        {"zoology",
         "Zoological Teaching Collection",
         "Zoologische Lehrsammlung",
         "Mounted animals, skeletons and wet specimens used in zoology courses.",
         "Präparierte Tiere, Skelette und Feuchtpräparate für die Lehre.",
         "ZOO",
         {"Species", "Specimen type", "Origin"},
         {"Art", "Präparat", "Herkunft"},
         {{"Barn owl", "mounted", "Saxony"},
          {"Red fox", "mounted", "Bavaria"},
          {"Common frog", "skeleton", "Thuringia"},
          {"Octopus", "wet specimen", "Mediterranean"},
          {"Stag beetle", "pinned insect", "Hesse"},
          {"Hedgehog", "skeleton", "Brandenburg"}}},
        {"scientific-instruments",
         "Historical Scientific Instruments",
         "Historische wissenschaftliche Instrumente",
         "Microscopes, telescopes and measuring devices from university laboratories.",
         "Mikroskope, Teleskope und Messgeräte aus Universitätslaboren.",
         "INS",
         {"Instrument", "Maker", "Year"},
         {"Instrument", "Hersteller", "Jahr"},
         {{"Compound microscope", "Zeiss", "1890"},
          {"Refracting telescope", "Fraunhofer", "1824"},
          {"Galvanometer", "Siemens", "1875"},
          {"Sextant", "Troughton", "1810"},
          {"Barometer", "Fortin", "1850"}}},
        {"herbarium",
         "University Herbarium",
         "Universitätsherbarium",
         "Pressed and dried plant specimens documenting regional flora.",
         "Gepresste und getrocknete Pflanzenbelege der regionalen Flora.",
         "HER",
         {"Taxon", "Habitat", "Collector"},
         {"Taxon", "Lebensraum", "Sammler"},
         {{"Arnica montana", "mountain meadow", "Koch"},
          {"Drosera rotundifolia", "bog", "Meyer"},
          {"Quercus robur", "forest", "Schulz"},
          {"Gentiana acaulis", "alpine pasture", "Koch"}}},
        {"numismatics",
         "Numismatic Collection",
         "Numismatische Sammlung",
         "Coins and medals from antiquity to the modern era.",
         "Münzen und Medaillen von der Antike bis zur Neuzeit.",
         "NUM",
         {"Coin", "Period", "Metal"},
         {"Münze", "Epoche", "Metall"},
         {{"Athenian tetradrachm", "Classical", "silver"},
          {"Roman denarius", "Imperial", "silver"},
          {"Florentine florin", "Medieval", "gold"},
          {"Prussian thaler", "Early modern", "silver"}}},
    };
    return t;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::string placeholder_png(std::uint64_t key)
{
    constexpr std::uint32_t side = 32;
    const auto c1 = splitmix64(key);
    const auto c2 = splitmix64(key + 1);
    const std::uint32_t stripe = 2 + static_cast<std::uint32_t>(c2 % 6);
    std::vector<std::uint8_t> px(side * side * 3);
    for (std::uint32_t y = 0; y < side; ++y)
        for (std::uint32_t x = 0; x < side; ++x) {
            const bool band = ((x + y) / stripe) % 2 == 0;
            const auto& c = band ? c1 : c2;
            auto* p = &px[(y * side + x) * 3];
            p[0] = static_cast<std::uint8_t>(c);
            p[1] = static_cast<std::uint8_t>(c >> 8);
            p[2] = static_cast<std::uint8_t>(c >> 16);
        }
    return encode_png_rgb(side, side, px);
}

} // namespace

FixtureCorpus generate_fixture(std::uint64_t seed, std::size_t n_collections, std::size_t n_records)
{
    if (n_collections < 1 || n_records < n_collections)
        throw Error(ErrorKind::invalid_argument, "fixture needs n_records >= n_collections >= 1");

    FixtureCorpus corpus;
    const auto& pool = themes();
    for (std::size_t c = 0; c < n_collections; ++c) {
        const auto& t = pool[c % pool.size()];
        const auto round = c / pool.size();
        const std::string suffix = round == 0 ? "" : "-" + std::to_string(round + 1);
        CollectionDescriptor col;
        col.collection_name = t.name + suffix;
        col.murag_id = make_collection_id(col.collection_name);
        col.title = t.title + (round == 0 ? std::string{} : " " + std::to_string(round + 1));
        col.title_de = t.title_de;
        col.description = t.description;
        col.description_de = t.description_de;
        col.contacts = {{"Collection Office", std::string("office@") + t.name + ".example.org"}};
        for (std::size_t f = 0; f < t.fields.size(); ++f)
            col.fields.push_back({t.fields[f], t.fields[f], t.labels_de[f]});
        col.title_fields = {t.fields[0]};
        corpus.collections.push_back(std::move(col));
    }

    std::vector<std::size_t> per_collection(n_collections, 0);
    for (std::size_t i = 0; i < n_records; ++i) {
        const auto c = i % n_collections;
        const auto& t = pool[c % pool.size()];
        const auto& col = corpus.collections[c];
        const auto j = per_collection[c]++;
        const auto pick = j % t.items.size();
        const auto& item = t.items[pick];
        const auto cycle = j / t.items.size();

        RecordDescriptor r;
        r.fundus_id = 100000 + static_cast<std::int64_t>(i);
        r.collection_name = col.collection_name;
        r.title = std::string(item[0]) + (cycle == 0 ? "" : " (" + std::to_string(cycle + 1) + ")");
        char catalogno[32];
        std::snprintf(catalogno, sizeof catalogno, "%s-%04zu", t.catalog_prefix, j + 1);
        r.catalogno = catalogno;
        r.image_name = col.collection_name + "-" + std::to_string(j + 1) + ".png";
        r.details = {{t.fields[0], r.title}, {t.fields[1], item[1]}, {t.fields[2], item[2]}};
        r.murag_id = make_record_id(r.collection_name, r.catalogno, r.image_name);
        corpus.images[r.image_name] = placeholder_png(seed ^ splitmix64(i + 1));
        corpus.records.push_back(std::move(r));
    }
    return corpus;
}

std::string fixture_manifest(const FixtureCorpus& corpus)
{
    std::string out = json{{"kind", "manifest"}, {"image_root", "images"}}.dump() + "\n";
    for (const auto& c : corpus.collections) {
        json j = c;
        j.erase("murag_id");
        j["kind"] = "collection";
        out += j.dump() + "\n";
    }
    for (const auto& r : corpus.records) {
        json j = r;
        j.erase("murag_id");
        j["kind"] = "record";
        out += j.dump() + "\n";
    }
    return out;
}

std::filesystem::path write_fixture(const FixtureCorpus& corpus, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir / "images");
    for (const auto& [name, bytes] : corpus.images)
        write_file(dir / "images" / name, bytes);
    const auto manifest = dir / "manifest.jsonl";
    write_file(manifest, fixture_manifest(corpus));
    return manifest;
}

} // namespace exhibit
