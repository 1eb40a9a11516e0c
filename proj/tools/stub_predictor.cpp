// Line-protocol predictor endpoint for tests and smoke runs.
//
//   pih_stub_predictor [zero|truth|flip|hang|garbage|die|error] [--after N]
//
// "truth" echoes the request's truth field, "flip" negates it, and the
// failure modes start after N well-formed answers (default 0).

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "pih/external.hpp"

int main(int argc, char** argv) {
    std::string mode = argc > 1 ? argv[1] : "zero";
    long after = 0;
    for (int i = 2; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--after")
            after = std::atol(argv[i + 1]);

    std::string line;
    long served = 0;
    while (std::getline(std::cin, line)) {
        pih::WireRequest req;
        try {
            req = pih::decode_request(line);
        } catch (const std::exception& e) {
            std::cout << nlohmann::json{{"id", nullptr}, {"error", e.what()}}.dump() << std::endl;
            continue;
        }
        const bool failing = served >= after;
        if (failing && mode == "hang") {
            std::this_thread::sleep_for(std::chrono::hours(1));
        } else if (failing && mode == "garbage") {
            std::cout << "this is not json" << std::endl;
        } else if (failing && mode == "die") {
            return 1;
        } else if (failing && mode == "error") {
            std::cout << nlohmann::json{{"id", req.id}, {"error", "model unavailable"}}.dump() << std::endl;
        } else {
            pih::Vec2px p{};
            if ((mode == "truth" || mode == "flip") && req.truth)
                p = mode == "truth" ? *req.truth : pih::Vec2px{-req.truth->x, -req.truth->y};
            std::cout << nlohmann::json{{"id", req.id}, {"x", p.x}, {"y", p.y}}.dump() << std::endl;
        }
        ++served;
    }
    return 0;
}
