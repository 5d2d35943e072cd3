#include "stochavg/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace stochavg {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i)
    {
        if (i == s.size() || s[i] == sep)
        {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

double parse_real(std::string_view s, std::size_t offset)
{
    s = trim(s);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("expected a real number, got '" + std::string(s) + "'", offset);
    return value;
}

std::size_t parse_index(std::string_view s, std::size_t offset)
{
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || value == 0)
        throw ParseError("bad index '" + std::string(s) + "'", offset);
    return value;
}

}  // namespace

std::vector<double> parse_real_list(std::string_view text)
{
    std::vector<double> out;
    for (auto item : split(text, ','))
        out.push_back(parse_real(item, 0));
    return out;
}

ComplexVec parse_complex_list(std::string_view text)
{
    ComplexVec out;
    for (auto item : split(text, ','))
        out.push_back(parse_field_expr(item, 0).evaluate({}));
    return out;
}

SystemConfig parse_system_config(std::string_view text)
{
    struct Entry
    {
        std::string value;
        std::size_t offset;
    };
    std::map<std::string, std::map<std::string, Entry>> sections;
    std::string section;
    bool seen_format = false;

    std::size_t offset = 0;
    while (offset <= text.size())
    {
        std::size_t eol = text.find('\n', offset);
        if (eol == std::string_view::npos)
            eol = text.size();
        std::string_view line = text.substr(offset, eol - offset);
        std::size_t const line_offset = offset;
        offset = eol + 1;

        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;

        if (line.front() == '[')
        {
            if (line.back() != ']')
                throw ParseError("unterminated section header", line_offset);
            section = std::string(trim(line.substr(1, line.size() - 2)));
            static std::set<std::string> const known{"system", "drift", "hamiltonian",
                                                     "dispersion", "experiment"};
            if (!known.count(section))
                throw ParseError("unknown section [" + section + "]", line_offset);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("expected key = value", line_offset);
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (!seen_format)
        {
            if (key != "format" || !section.empty())
                throw ParseError("first entry must be 'format = 1'", line_offset);
            if (value != "1")
                throw ParseError("unsupported format version '" + value + "'", line_offset);
            seen_format = true;
            continue;
        }
        if (section.empty())
            throw ParseError("entry outside of a section", line_offset);
        if (!sections[section].emplace(key, Entry{value, line_offset}).second)
            throw ParseError("duplicate key '" + key + "'", line_offset);
    }
    if (!seen_format)
        throw ParseError("missing 'format = 1' header", 0);

    auto& sys = sections["system"];
    auto take = [&](std::string const& key) -> Entry const* {
        auto it = sys.find(key);
        return it == sys.end() ? nullptr : &it->second;
    };
    static std::set<std::string> const system_keys{"n", "n1", "lambdas", "epsilon",
                                                   "psi_kind", "alpha", "m0"};
    for (auto const& [key, e] : sys)
    {
        if (!system_keys.count(key))
            throw ParseError("unknown [system] key '" + key + "'", e.offset);
    }
    Entry const* n_entry = take("n");
    Entry const* lambdas_entry = take("lambdas");
    if (!n_entry || !lambdas_entry)
        throw ParseError("[system] requires n and lambdas", 0);
    std::size_t const n = parse_index(n_entry->value, n_entry->offset);
    std::size_t const n1 = take("n1") ? parse_index(take("n1")->value, take("n1")->offset) : n;

    SystemSpec::Params params;
    params.lambdas = parse_real_list(lambdas_entry->value);
    if (params.lambdas.size() != n)
        throw ParseError("lambdas must list n values", lambdas_entry->offset);
    if (auto e = take("epsilon"))
        params.epsilon = parse_real(e->value, e->offset);
    if (auto e = take("psi_kind"))
        params.psi_kind = psi_kind_from_string(e->value);
    if (auto e = take("alpha"))
        params.alpha = parse_real(e->value, e->offset);
    if (auto e = take("m0"))
        params.m0 = parse_real(e->value, e->offset);

    auto parse_expr = [n](Entry const& e) {
        try
        {
            return parse_field_expr(e.value, n);
        }
        catch (ParseError const& err)
        {
            throw ParseError(std::string("in expression '") + e.value + "': " + err.what(),
                             e.offset + err.position());
        }
    };

    params.p1.assign(n, FieldExpr::literal(0.0));
    for (auto const& [key, e] : sections["drift"])
    {
        if (!key.starts_with("p1_"))
            throw ParseError("unknown [drift] key '" + key + "'", e.offset);
        std::size_t k = parse_index(std::string_view(key).substr(3), e.offset);
        if (k > n)
            throw ParseError("drift component out of range", e.offset);
        params.p1[k - 1] = parse_expr(e);
    }
    for (auto const& [key, e] : sections["hamiltonian"])
    {
        if (key != "h")
            throw ParseError("unknown [hamiltonian] key '" + key + "'", e.offset);
        params.h = parse_expr(e);
    }
    params.psi.rows = n;
    params.psi.cols = n1;
    params.psi.entries.assign(n * n1, FieldExpr::literal(0.0));
    for (auto const& [key, e] : sections["dispersion"])
    {
        auto parts = split(key, '_');
        if (parts.size() != 3 || parts[0] != "psi")
            throw ParseError("unknown [dispersion] key '" + key + "'", e.offset);
        std::size_t k = parse_index(parts[1], e.offset);
        std::size_t l = parse_index(parts[2], e.offset);
        if (k > n || l > n1)
            throw ParseError("dispersion entry out of range", e.offset);
        params.psi.entries[(k - 1) * n1 + (l - 1)] = parse_expr(e);
    }

    std::map<std::string, std::string> experiment;
    for (auto const& [key, e] : sections["experiment"])
        experiment[key] = e.value;

    return SystemConfig{SystemSpec::create(std::move(params)), std::move(experiment),
                        std::string(text)};
}

SystemConfig load_system_config(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_system_config(buf.str());
}

}  // namespace stochavg
