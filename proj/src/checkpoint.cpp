#include "avec/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace avec {

using nlohmann::json;

void save_checkpoint(const std::string& path, long step,
                     const std::vector<NamedTensor>& params) {
    json root;
    root["format"] = "avec-checkpoint-v1";
    root["step"] = step;
    json plist = json::array();
    for (const NamedTensor& p : params) {
        if (!p.value.all_finite())
            throw std::invalid_argument("save_checkpoint: non-finite tensor " + p.name);
        json e;
        e["name"] = p.name;
        e["shape"] = p.value.shape;
        e["data"] = p.value.data;
        plist.push_back(std::move(e));
    }
    root["params"] = std::move(plist);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << root.dump(1) << "\n";
}

std::vector<NamedTensor> load_checkpoint(const std::string& path, long* step) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    json root = json::parse(in);
    if (root.value("format", "") != "avec-checkpoint-v1")
        throw std::runtime_error("load_checkpoint: unknown format in " + path);
    if (step) *step = root.at("step").get<long>();
    std::vector<NamedTensor> params;
    for (const json& e : root.at("params")) {
        NamedTensor nt;
        nt.name = e.at("name").get<std::string>();
        auto shape = e.at("shape").get<std::vector<std::size_t>>();
        auto data = e.at("data").get<std::vector<double>>();
        nt.value = Tensor(std::move(shape), std::move(data));
        params.push_back(std::move(nt));
    }
    return params;
}

}  // namespace avec
