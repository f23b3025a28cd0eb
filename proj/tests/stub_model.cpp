// Analytic stand-in for the trainer, driven through ablate's hooks.
//
//   stub_model train   --mixture F --lr X --epochs N --out CKPT [--parent CKPT]
//   stub_model predict --checkpoint CKPT --pairs F --out PRED
//
// A checkpoint is a JSON file holding a, the number of adversarial
// (perturbed-provenance) pairs it was fine-tuned on. Predictions depend on a
// only, through integer closed forms:
//
//   perturbed pairs         first 248 + 52a/100 (of each 400) correct
//   original contradictions first 364 +  8a/100 (of each 400) correct
//   other original pairs    first 528 - 11a/100 (of each 600) correct
//
// counted by position within each group, integer division throughout.
// Incorrect answers predict (gold + 1) mod 3.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "inoculate/corpus.hpp"
#include "inoculate/modelgate.hpp"

using namespace inoculate;

namespace {

Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return Json::parse(in);
}

LabelProbs probs_for(Label l) {
    LabelProbs p{0.05, 0.05, 0.05};
    p[code(l)] = 0.9;
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"analytic stub model"};
    app.require_subcommand(1);
    std::string mixture, out, parent, checkpoint, pairs;
    double lr = 0;
    int epochs = 0;
    auto* train = app.add_subcommand("train");
    train->add_option("--mixture", mixture)->required();
    train->add_option("--lr", lr)->required();
    train->add_option("--epochs", epochs)->required();
    train->add_option("--out", out)->required();
    train->add_option("--parent", parent);
    auto* predict = app.add_subcommand("predict");
    predict->add_option("--checkpoint", checkpoint)->required();
    predict->add_option("--pairs", pairs)->required();
    predict->add_option("--out", out)->required();
    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            if (std::getenv("STUB_MODEL_FAIL_TRAIN")) {
                const std::string fail = std::getenv("STUB_MODEL_FAIL_TRAIN");
                if (mixture.find(fail) != std::string::npos) {
                    std::cerr << "simulated training failure\n";
                    return 7;
                }
            }
            const auto d = load_jsonl(mixture);
            long a = 0;
            for (const auto& p : d.pairs) a += p.is_perturbed() ? 1 : 0;
            std::ofstream f(out);
            f << Json{{"n_adversarial", a}, {"lr", lr}, {"epochs", epochs}, {"parent", parent}}.dump() << '\n';
            return f ? 0 : 1;
        }
        const auto ckpt = read_json(checkpoint);
        const long a = ckpt.at("n_adversarial").get<long>();
        const long k_adv = 248 + 52 * a / 100;
        const long k_contra = 364 + 8 * a / 100;
        const long k_other = 528 - 11 * a / 100;
        const auto d = load_jsonl(pairs);
        long i_adv = 0, i_contra = 0, i_other = 0;
        std::vector<Prediction> preds;
        for (const auto& p : d.pairs) {
            bool correct;
            if (p.is_perturbed())
                correct = (i_adv++ % 400) < k_adv;
            else if (p.gold == Label::contradiction)
                correct = (i_contra++ % 400) < k_contra;
            else
                correct = (i_other++ % 600) < k_other;
            const Label l = correct ? p.gold : label_from_code((code(p.gold) + 1) % 3);
            preds.push_back({p.id, l, probs_for(l)});
        }
        write_predictions(std::span<const Prediction>(preds), std::filesystem::path(out));
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "stub_model: " << e.what() << '\n';
        return 1;
    }
}
