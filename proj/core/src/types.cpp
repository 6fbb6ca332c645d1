#include "dermx/types.hpp"

#include "dermx/errors.hpp"

namespace dermx {

const std::array<std::string, 7>& disease_names() {
    static const std::array<std::string, 7> names = {
        "acne",
        "actinic keratosis",
        "psoriasis",
        "seborrheic dermatitis",
        "viral warts",
        "vitiligo",
        "other",
    };
    return names;
}

Disease disease_from_name(const std::string& name) {
    const auto& names = disease_names();
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<Disease>(i);
    throw SchemaError("unknown diagnosis '" + name + "'");
}

const std::string& to_string(Disease d) { return disease_names()[static_cast<size_t>(d)]; }

Source source_from_name(const std::string& name) {
    if (name == "DermNetNZ") return Source::kDermNetNZ;
    if (name == "SD260" || name == "SD-260") return Source::kSD260;
    throw SchemaError("unknown source '" + name + "'");
}

const std::string& to_string(Source s) {
    static const std::string dn = "DermNetNZ";
    static const std::string sd = "SD260";
    return s == Source::kDermNetNZ ? dn : sd;
}

double PrevalenceTable::at(Disease d, const std::string& characteristic) const {
    for (size_t i = 0; i < characteristics.size(); ++i)
        if (characteristics[i] == characteristic) return rows[static_cast<size_t>(d)][i];
    throw SchemaError("characteristic '" + characteristic + "' not in prevalence table");
}

}  // namespace dermx
