// SPDX-License-Identifier: Apache-2.0
#include "axbxp/dataset.hpp"

#include <fstream>
#include <sstream>

#include "axbxp/errors.hpp"

namespace axbxp {

Dataset load_digits_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        raise(Errc::io_error, "cannot open dataset file '" + path + "'");
    Dataset d;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<float> row;
        while (std::getline(ss, field, ','))
            row.push_back(std::stof(field));
        if (static_cast<int>(row.size()) != d.dims + 1)
            raise(Errc::format_error, "dataset row has " + std::to_string(row.size()) +
                                          " fields, expected " + std::to_string(d.dims + 1));
        for (int i = 0; i < d.dims; ++i)
            d.pixels.push_back(row[static_cast<std::size_t>(i)] / 16.0f);
        const int label = static_cast<int>(row.back());
        if (label < 0 || label >= d.classes)
            raise(Errc::format_error, "dataset label out of range");
        d.labels.push_back(label);
        ++d.count;
    }
    if (d.count == 0)
        raise(Errc::format_error, "dataset is empty");
    return d;
}

std::vector<int> train_indices(const Dataset& d) {
    std::vector<int> idx;
    for (int i = 0; i < d.count; ++i)
        if (i % 5 != 0)
            idx.push_back(i);
    return idx;
}

std::vector<int> test_indices(const Dataset& d) {
    std::vector<int> idx;
    for (int i = 0; i < d.count; ++i)
        if (i % 5 == 0)
            idx.push_back(i);
    return idx;
}

} // namespace axbxp
