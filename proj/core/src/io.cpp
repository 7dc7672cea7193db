// SPDX-License-Identifier: Apache-2.0

#include "slotflow/io.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace slotflow {

namespace {

using nlohmann::json;

json parse_file(const std::string &path, const char *what) {
    std::ifstream in(path);
    if (!in) {
        throw Error(std::string(what) + ": cannot open " + path);
    }
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception &e) {
        throw ShapeError(std::string(what) + " " + path + ": " + e.what());
    }
}

void write_file(const std::string &text, const std::string &path, const char *what) {
    std::ofstream out(path);
    if (!out) {
        throw Error(std::string(what) + ": cannot open " + path + " for writing");
    }
    out << text;
    if (!out) {
        throw Error(std::string(what) + ": write to " + path + " failed");
    }
}

json matrix_rows(const Matrix &m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); r++) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); c++) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json counters_obj(const OpCounters &c) {
    return json{{"ct_mults", c.ct_mults},
                {"pt_mults", c.pt_mults},
                {"adds", c.adds},
                {"rotations", c.rotations},
                {"conjugations", c.conjugations},
                {"bootstraps", c.bootstraps},
                {"protocol_rounds", c.protocol_rounds},
                {"protocol_messages", c.protocol_messages}};
}

json plan_obj(const BlockPlan &plan) {
    json layers = json::array();
    for (const auto &r : plan.layers) {
        layers.push_back(json{{"q", r.q},
                              {"p", r.p},
                              {"m", r.m},
                              {"diag_count", r.diag_count},
                              {"compressed", r.compressed}});
    }
    return json{{"format", 1},
                {"batch", plan.batch},
                {"layers", std::move(layers)},
                {"predicted_cost", counters_obj(plan.predicted_cost)}};
}

}  // namespace

HeParams load_params(const std::string &path) {
    json j = parse_file(path, "params");
    try {
        HeParams p;
        p.slot_count = j.at("slot_count").get<std::size_t>();
        p.max_level = j.at("max_level").get<int>();
        p.post_bootstrap_level = j.value("post_bootstrap_level", p.max_level);
        p.bootstrap_depth_cost =
            j.value("bootstrap_depth_cost", p.max_level - p.post_bootstrap_level);
        p.validate();
        return p;
    } catch (const json::exception &e) {
        throw ShapeError("params " + path + ": " + e.what());
    }
}

std::string params_json(const HeParams &p) {
    return json{{"slot_count", p.slot_count},
                {"max_level", p.max_level},
                {"post_bootstrap_level", p.post_bootstrap_level},
                {"bootstrap_depth_cost", p.bootstrap_depth_cost}}
        .dump(2);
}

ModelSpec load_model(const std::string &path) {
    json j = parse_file(path, "model");
    try {
        if (j.value("format", 0) != 1) {
            throw ShapeError("model " + path + ": unsupported format version");
        }
        ModelSpec m;
        const json &shape = j.at("input_shape");
        m.in_channels = shape.value("channels", std::size_t{1});
        m.in_rows = shape.value("rows", std::size_t{1});
        m.in_cols = shape.value("cols", std::size_t{1});
        for (const json &jl : j.at("layers")) {
            LayerShape cur = shape_after(m, m.layers.size());
            const std::string type = jl.at("type").get<std::string>();
            if (type == "fc") {
                FcLayer fc;
                const json &w = jl.at("weights");
                fc.d_in = w.size();
                fc.d_out = fc.d_in == 0 ? 0 : w.at(0).size();
                fc.weights = Matrix(fc.d_in, fc.d_out);
                for (std::size_t r = 0; r < fc.d_in; r++) {
                    const json &row = w.at(r);
                    if (row.size() != fc.d_out) {
                        throw ShapeError("model " + path + ": ragged fc weight rows");
                    }
                    for (std::size_t c = 0; c < fc.d_out; c++) {
                        fc.weights(r, c) = row.at(c).get<double>();
                    }
                }
                fc.bias = jl.value("bias", std::vector<double>{});
                m.layers.emplace_back(std::move(fc));
            } else if (type == "conv") {
                ConvLayer cv;
                const json &ks = jl.at("kernels");
                cv.spec.out_kernels = ks.size();
                cv.spec.in_channels = ks.at(0).size();
                cv.spec.f_h = ks.at(0).at(0).size();
                cv.spec.f_w = ks.at(0).at(0).at(0).size();
                cv.spec.r = cur.rows;
                cv.spec.c = cur.cols;
                auto stride = jl.value("stride", std::vector<std::size_t>{1, 1});
                if (stride.size() != 2) {
                    throw ShapeError("model " + path + ": conv stride needs two entries");
                }
                cv.spec.s_h = stride[0];
                cv.spec.s_w = stride[1];
                for (const json &jk : ks) {
                    Tensor3 k(cv.spec.in_channels, cv.spec.f_h, cv.spec.f_w);
                    for (std::size_t ch = 0; ch < cv.spec.in_channels; ch++) {
                        for (std::size_t fy = 0; fy < cv.spec.f_h; fy++) {
                            for (std::size_t fx = 0; fx < cv.spec.f_w; fx++) {
                                k(ch, fy, fx) = jk.at(ch).at(fy).at(fx).get<double>();
                            }
                        }
                    }
                    cv.kernels.push_back(std::move(k));
                }
                cv.bias = jl.value("bias", std::vector<double>{});
                m.layers.emplace_back(std::move(cv));
            } else if (type == "pool") {
                PoolLayer pl;
                const std::string kind = jl.value("kind", std::string("sum"));
                if (kind == "sum") {
                    pl.kind = PoolKind::Sum;
                } else if (kind == "avg" || kind == "average") {
                    pl.kind = PoolKind::Average;
                } else {
                    throw ShapeError("model " + path + ": unknown pool kind '" + kind + "'");
                }
                auto window = jl.at("window").get<std::vector<std::size_t>>();
                auto stride = jl.value("stride", window);
                if (window.size() != 2 || stride.size() != 2) {
                    throw ShapeError("model " + path + ": pool window/stride need two entries");
                }
                pl.w_h = window[0];
                pl.w_w = window[1];
                pl.s_h = stride[0];
                pl.s_w = stride[1];
                m.layers.emplace_back(pl);
            } else if (type == "activation") {
                ActLayer a;
                a.function = jl.at("function").get<std::string>();
                a.degree = jl.at("degree").get<int>();
                auto interval = jl.value("interval", std::vector<double>{-8.0, 8.0});
                if (interval.size() != 2) {
                    throw ShapeError("model " + path + ": interval needs two entries");
                }
                a.a = interval[0];
                a.b = interval[1];
                m.layers.emplace_back(a);
            } else {
                throw ShapeError("model " + path + ": unknown layer type '" + type + "'");
            }
        }
        m.validate();
        return m;
    } catch (const json::exception &e) {
        throw ShapeError("model " + path + ": " + e.what());
    }
}

std::string model_json(const ModelSpec &m) {
    json layers = json::array();
    for (std::size_t t = 0; t < m.layers.size(); t++) {
        const LayerSpec &l = m.layers[t];
        if (const auto *fc = std::get_if<FcLayer>(&l)) {
            json jl{{"type", "fc"}, {"weights", matrix_rows(fc->weights)}};
            if (!fc->bias.empty()) {
                jl["bias"] = fc->bias;
            }
            layers.push_back(std::move(jl));
        } else if (const auto *cv = std::get_if<ConvLayer>(&l)) {
            json ks = json::array();
            for (const Tensor3 &k : cv->kernels) {
                json jk = json::array();
                for (std::size_t ch = 0; ch < k.channels(); ch++) {
                    json jc = json::array();
                    for (std::size_t fy = 0; fy < k.rows(); fy++) {
                        json jr = json::array();
                        for (std::size_t fx = 0; fx < k.cols(); fx++) {
                            jr.push_back(k(ch, fy, fx));
                        }
                        jc.push_back(std::move(jr));
                    }
                    jk.push_back(std::move(jc));
                }
                ks.push_back(std::move(jk));
            }
            json jl{{"type", "conv"},
                    {"kernels", std::move(ks)},
                    {"stride", std::vector<std::size_t>{cv->spec.s_h, cv->spec.s_w}}};
            if (!cv->bias.empty()) {
                jl["bias"] = cv->bias;
            }
            layers.push_back(std::move(jl));
        } else if (const auto *pl = std::get_if<PoolLayer>(&l)) {
            layers.push_back(json{
                {"type", "pool"},
                {"kind", pl->kind == PoolKind::Sum ? "sum" : "avg"},
                {"window", std::vector<std::size_t>{pl->w_h, pl->w_w}},
                {"stride", std::vector<std::size_t>{pl->s_h, pl->s_w}}});
        } else {
            const auto &a = std::get<ActLayer>(l);
            layers.push_back(json{{"type", "activation"},
                                  {"function", a.function},
                                  {"degree", a.degree},
                                  {"interval", std::vector<double>{a.a, a.b}}});
        }
    }
    return json{{"format", 1},
                {"input_shape",
                 json{{"channels", m.in_channels}, {"rows", m.in_rows}, {"cols", m.in_cols}}},
                {"layers", std::move(layers)}}
        .dump(2);
}

void save_model(const ModelSpec &m, const std::string &path) {
    write_file(model_json(m), path, "model");
}

namespace {

BatchFile load_batch_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("batch: cannot open " + path);
    }
    auto split = [](const std::string &line) {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            out.push_back(cell);
        }
        return out;
    };
    std::string line;
    if (!std::getline(in, line)) {
        throw ShapeError("batch " + path + ": empty file");
    }
    auto head = split(line);
    if (head.size() != 4) {
        throw ShapeError("batch " + path + ": header must be n,channels,rows,cols");
    }
    BatchFile b;
    try {
        b.shape.n = std::stoul(head[0]);
        b.shape.h = std::stoul(head[1]);
        b.shape.r = std::stoul(head[2]);
        b.shape.c = std::stoul(head[3]);
    } catch (const std::exception &) {
        throw ShapeError("batch " + path + ": bad header");
    }
    b.data = Matrix(b.shape.n, b.shape.d());
    for (std::size_t r = 0; r < b.shape.n; r++) {
        if (!std::getline(in, line)) {
            throw ShapeError("batch " + path + ": expected " + std::to_string(b.shape.n) +
                             " data rows");
        }
        auto cells = split(line);
        if (cells.size() != b.shape.d()) {
            throw ShapeError("batch " + path + ": row " + std::to_string(r) + " has " +
                             std::to_string(cells.size()) + " values, expected " +
                             std::to_string(b.shape.d()));
        }
        for (std::size_t c = 0; c < cells.size(); c++) {
            try {
                b.data(r, c) = std::stod(cells[c]);
            } catch (const std::exception &) {
                throw ShapeError("batch " + path + ": bad number '" + cells[c] + "'");
            }
        }
    }
    return b;
}

}  // namespace

BatchFile load_batch(const std::string &path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) {
        return load_batch_csv(path);
    }
    json j = parse_file(path, "batch");
    try {
        if (j.value("format", 0) != 1) {
            throw ShapeError("batch " + path + ": unsupported format version");
        }
        BatchFile b;
        const json &shape = j.at("shape");
        b.shape.n = shape.at("n").get<std::size_t>();
        b.shape.h = shape.value("channels", std::size_t{1});
        b.shape.r = shape.value("rows", std::size_t{1});
        b.shape.c = shape.value("cols", std::size_t{1});
        const json &data = j.at("data");
        if (data.size() != b.shape.n) {
            throw ShapeError("batch " + path + ": " + std::to_string(data.size()) +
                             " rows for n=" + std::to_string(b.shape.n));
        }
        b.data = Matrix(b.shape.n, b.shape.d());
        for (std::size_t r = 0; r < b.shape.n; r++) {
            const json &row = data.at(r);
            if (row.size() != b.shape.d()) {
                throw ShapeError("batch " + path + ": row " + std::to_string(r) + " has " +
                                 std::to_string(row.size()) + " values, expected " +
                                 std::to_string(b.shape.d()));
            }
            for (std::size_t c = 0; c < b.shape.d(); c++) {
                b.data(r, c) = row.at(c).get<double>();
            }
        }
        return b;
    } catch (const json::exception &e) {
        throw ShapeError("batch " + path + ": " + e.what());
    }
}

std::string batch_json(const BatchFile &b) {
    return json{{"format", 1},
                {"shape",
                 json{{"n", b.shape.n},
                      {"channels", b.shape.h},
                      {"rows", b.shape.r},
                      {"cols", b.shape.c}}},
                {"data", matrix_rows(b.data)}}
        .dump(2);
}

void save_batch(const BatchFile &b, const std::string &path) {
    write_file(batch_json(b), path, "batch");
}

BlockPlan load_plan(const std::string &path) {
    json j = parse_file(path, "plan");
    try {
        if (j.value("format", 0) != 1) {
            throw ShapeError("plan " + path + ": unsupported format version");
        }
        BlockPlan p;
        p.batch = j.at("batch").get<std::size_t>();
        for (const json &jl : j.at("layers")) {
            BlockPlanLayer row;
            row.q = jl.at("q").get<std::size_t>();
            row.p = jl.at("p").get<std::size_t>();
            row.m = jl.at("m").get<std::size_t>();
            row.diag_count = jl.value("diag_count", std::size_t{0});
            row.compressed = jl.value("compressed", false);
            p.layers.push_back(row);
        }
        return p;
    } catch (const json::exception &e) {
        throw ShapeError("plan " + path + ": " + e.what());
    }
}

std::string plan_json(const BlockPlan &plan) { return plan_obj(plan).dump(2); }

void save_plan(const BlockPlan &plan, const std::string &path) {
    write_file(plan_json(plan), path, "plan");
}

std::string counters_json(const OpCounters &c) { return counters_obj(c).dump(2); }

std::string results_json(const RunResult &result, const std::string &transcript_path) {
    return json{{"predictions", matrix_rows(result.predictions)},
                {"counters", counters_obj(result.counters)},
                {"eval_counters", counters_obj(result.eval_counters)},
                {"plan", plan_obj(result.plan)},
                {"chunks", result.chunks},
                {"virtual_time_ms", result.virtual_time_ms},
                {"transcript_path", transcript_path}}
        .dump(2);
}

std::string approx_json(const std::string &function, const ChebApprox &fit) {
    return json{{"function", function},
                {"degree", fit.degree},
                {"interval", std::vector<double>{fit.a, fit.b}},
                {"coeffs", fit.coeffs},
                {"max_abs_error", fit.max_abs_error},
                {"depth", fit.depth_cost}}
        .dump(2);
}

void save_transcript(const std::vector<TranscriptEntry> &entries, const std::string &path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("transcript: cannot open " + path + " for writing");
    }
    for (const auto &e : entries) {
        out << json{{"protocol", e.protocol},
                    {"round", e.round},
                    {"sender", e.sender},
                    {"recipient", e.recipient},
                    {"bytes_estimate", e.bytes_estimate}}
                   .dump()
            << '\n';
    }
}

void save_text(const std::string &text, const std::string &path) {
    write_file(text, path, "output");
}

}  // namespace slotflow
